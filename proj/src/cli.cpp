#include "unpaired_sr/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include "unpaired_sr/log.hpp"

#include "unpaired_sr/config.hpp"
#include "unpaired_sr/metrics.hpp"
#include "unpaired_sr/smoke.hpp"

namespace unpaired_sr {

namespace {

struct ConfigArgs {
    std::string path;
    std::vector<std::string> sets;
    std::optional<uint64_t> seed;
    std::string out_dir;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", path, "config file (defaults apply when omitted)");
        cmd->add_option("--set", sets, "override, section.key=value (repeatable)");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("-o,--out", out_dir, "output directory (run.out_dir)");
    }

    [[nodiscard]] RunConfig load() const {
        auto overrides = sets;
        if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
        if (!out_dir.empty()) overrides.push_back("run.out_dir=" + out_dir);
        return path.empty() ? default_config(overrides) : parse_config(path, overrides);
    }
};

UnpairedCorpus corpus_of(const RunConfig& cfg) {
    if (cfg.data.lr_dir.empty() || cfg.data.hr_dir.empty()) {
        throw ConfigError("data.lr_dir and data.hr_dir must be set");
    }
    return scan_corpus(cfg.data.lr_dir, cfg.data.hr_dir, ScaleFactor(cfg.data.scale));
}

fs::path pairs_of(const RunConfig& cfg) {
    return cfg.data.pairs.empty() ? cfg.run.out_dir / "pairs" / "pairs.tsv" : cfg.data.pairs;
}

void train_degrade(const RunConfig& cfg) {
    const auto corpus = corpus_of(cfg);
    fs::create_directories(cfg.run.out_dir);
    auto s1 = cfg.stage1;
    s1.diagnostic_dir = cfg.run.out_dir;
    std::ofstream log(cfg.run.out_dir / "stage1_log.jsonl");
    log::info("stage 1: ", corpus.hr_paths.size(), " HR / ", corpus.lr_paths.size(), " LR images, ", s1.total_steps, " steps");
    const auto state = train_stage1(corpus, s1, &log);
    write_checkpoint(state, cfg.run.out_dir / "stage1.ckpt");
    log::info("wrote ", (cfg.run.out_dir / "stage1.ckpt").string());
}

void synthesize(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& out) {
    if (cfg.data.hr_dir.empty()) throw ConfigError("data.hr_dir must be set");
    const auto state = read_checkpoint(checkpoint);
    auto g = load_generator(state);
    const int scale = state.header.networks.at("scale").get<int>();
    if (scale != cfg.data.scale) {
        throw ConfigError("checkpoint scale x" + std::to_string(scale) + " differs from data.scale x" +
                          std::to_string(cfg.data.scale));
    }
    const auto producer = checkpoint.filename().string() + "@" + std::to_string(state.header.step) + "#" +
                          state.header.config_digest;
    const auto set = synthesize_lr_corpus(g, list_images(cfg.data.hr_dir), ScaleFactor(scale), out, producer);
    log::info("wrote ", set.pairs.size(), " generated pairs to ", out.string());
}

void train_sr(const RunConfig& cfg) {
    const auto pairs = read_manifest(pairs_of(cfg));
    UnpairedCorpus corpus{{}, {}, ScaleFactor(cfg.data.scale)};
    if (cfg.stage2.needs_real_lr()) {
        if (cfg.data.lr_dir.empty()) throw ConfigError("data.lr_dir must be set for ablation " + to_string(cfg.stage2.ablation));
        corpus.lr_paths = list_images(cfg.data.lr_dir);
    }
    fs::create_directories(cfg.run.out_dir);
    auto s2 = cfg.stage2;
    s2.diagnostic_dir = cfg.run.out_dir;
    std::ofstream log(cfg.run.out_dir / "stage2_log.jsonl");
    log::info("stage 2 (", to_string(s2.ablation), "): ", pairs.pairs.size(), " pairs, ", s2.total_steps, " steps");
    const auto state = train_stage2(pairs, corpus, s2, &log);
    write_checkpoint(state, cfg.run.out_dir / "stage2.ckpt");
    log::info("wrote ", (cfg.run.out_dir / "stage2.ckpt").string());
}

void super_resolve_paths(const fs::path& checkpoint, const fs::path& in, const fs::path& out, TileOptions tiles) {
    auto r = load_sr_network(read_checkpoint(checkpoint));
    if (fs::is_directory(in)) {
        fs::create_directories(out);
        for (const auto& p : list_images(in)) {
            save_image(super_resolve(r, load_image(p), tiles), out / (p.stem().string() + ".png"));
        }
        return;
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_image(super_resolve(r, load_image(in), tiles), out);
}

}  // namespace

void configure_logging() { log::configure_from_env(); }

int run_cli(int argc, char** argv) {
    CLI::App app{"Unpaired real-world super-resolution: degradation learning and adaptive SR"};
    app.require_subcommand(1);

    ConfigArgs degrade_args;
    auto* degrade = app.add_subcommand("train-degrade", "train the degradation generator (stage 1)");
    degrade_args.attach(degrade);

    ConfigArgs synth_args;
    std::string synth_ckpt;
    std::string synth_out;
    auto* synth = app.add_subcommand("synthesize-lr", "write generated LR for every HR image");
    synth->add_option("-c,--config", synth_args.path, "config file");
    synth->add_option("--set", synth_args.sets, "override, section.key=value");
    synth->add_option("--checkpoint", synth_ckpt, "stage-1 checkpoint (default <out_dir>/stage1.ckpt)");
    synth->add_option("-o,--out", synth_out, "output directory (default <out_dir>/pairs)");

    ConfigArgs sr_args;
    auto* train_sr_cmd = app.add_subcommand("train-sr", "train the SR network (stage 2)");
    sr_args.attach(train_sr_cmd);

    std::string sr_in;
    std::string sr_out;
    std::string sr_ckpt;
    TileOptions tiles;
    auto* sr = app.add_subcommand("super-resolve", "upscale an image or a directory of images");
    sr->add_option("input", sr_in, "image or directory")->required();
    sr->add_option("output", sr_out, "image path or directory")->required();
    sr->add_option("--checkpoint", sr_ckpt, "stage-2 checkpoint")->required();
    sr->add_option("--tile", tiles.tile, "LR tile size")->capture_default_str();
    sr->add_option("--overlap", tiles.overlap, "LR tile overlap")->capture_default_str();

    std::string ev_results;
    std::string ev_refs;
    int64_t ev_border = -1;
    int ev_scale = 4;
    std::string ev_json;
    std::string ev_csv;
    std::string ev_plugin;
    auto* ev = app.add_subcommand("evaluate", "PSNR / SSIM of results against references");
    ev->add_option("results", ev_results, "result directory")->required();
    ev->add_option("refs", ev_refs, "reference directory")->required();
    ev->add_option("--scale", ev_scale, "scale factor; the default border crop")->capture_default_str();
    ev->add_option("--border", ev_border, "pixels cropped from every side (default: scale)");
    ev->add_option("--json", ev_json, "also write the report as JSON");
    ev->add_option("--csv", ev_csv, "also write per-image CSV");
    ev->add_option("--plugin", ev_plugin, "external perceptual metric command");

    std::string smoke_out;
    SmokeCorpusOptions smoke;
    auto* smoke_cmd = app.add_subcommand("make-smoke-corpus", "generate the procedural smoke corpus");
    smoke_cmd->add_option("-o,--out", smoke_out, "output root")->required();
    smoke_cmd->add_option("--n", smoke.n, "image count")->capture_default_str();
    smoke_cmd->add_option("--hr-size", smoke.hr_size, "HR side length")->capture_default_str();
    smoke_cmd->add_option("--scale", smoke.scale, "scale factor")->capture_default_str();
    smoke_cmd->add_option("--blur", smoke.degradation.blur_sigma, "oracle blur sigma")->capture_default_str();
    smoke_cmd->add_option("--noise", smoke.degradation.noise_sigma, "oracle noise sigma")->capture_default_str();
    smoke_cmd->add_option("--n-prime", smoke.n_prime, "HR images kept for training (default 2n/3)");
    smoke_cmd->add_option("--seed", smoke.seed, "seed")->capture_default_str();

    std::string split_in;
    std::string split_out;
    bool split_disjoint = false;
    int64_t split_n_prime = 0;
    uint64_t split_seed = 0;
    auto* split = app.add_subcommand("split", "derive an unpaired training corpus from <in>/{lr,hr}");
    split->add_option("--in", split_in, "source root with lr/ and hr/")->required();
    split->add_option("-o,--out", split_out, "destination root")->required();
    split->add_flag("--non-overlapping", split_disjoint, "draw disjoint HR and LR index subsets");
    split->add_option("--n-prime", split_n_prime, "HR images kept in the non-overlapping setting");
    split->add_option("--seed", split_seed, "seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    configure_logging();

    try {
        if (*degrade) {
            train_degrade(degrade_args.load());
        } else if (*synth) {
            const auto cfg = synth_args.load();
            const fs::path ckpt = synth_ckpt.empty() ? cfg.run.out_dir / "stage1.ckpt" : fs::path(synth_ckpt);
            const fs::path out = synth_out.empty() ? cfg.run.out_dir / "pairs" : fs::path(synth_out);
            synthesize(cfg, ckpt, out);
        } else if (*train_sr_cmd) {
            train_sr(sr_args.load());
        } else if (*sr) {
            if (tiles.tile < 8 || tiles.overlap < 0 || tiles.overlap * 2 >= tiles.tile) {
                throw ConfigError("--tile must be >= 8 and --overlap in [0, tile/2)");
            }
            super_resolve_paths(sr_ckpt, sr_in, sr_out, tiles);
        } else if (*ev) {
            const ScaleFactor scale(ev_scale);
            auto report = evaluate_corpus(ev_results, ev_refs, ev_border < 0 ? scale.value() : ev_border);
            if (!ev_plugin.empty()) report.plugin_scores = run_metric_plugin(ev_plugin, ev_results, ev_refs);
            const auto json = report.to_json().dump(2);
            std::cout << json << '\n';
            if (!ev_json.empty()) std::ofstream(ev_json) << json << '\n';
            if (!ev_csv.empty()) std::ofstream(ev_csv) << report.to_csv();
        } else if (*smoke_cmd) {
            const auto corpus = make_smoke_corpus(smoke_out, smoke);
            log::info("smoke corpus: ", corpus.train.hr_paths.size(), " HR / ", corpus.train.lr_paths.size(), " LR training images, ", corpus.held_out.size(), " held out");
        } else if (*split) {
            const fs::path in(split_in);
            const fs::path out(split_out);
            UnpairedCorpus source{list_images(in / "lr"), list_images(in / "hr"), ScaleFactor(4)};
            SplitSpec spec{split_disjoint ? SplitMode::non_overlapping : SplitMode::basic, split_n_prime};
            if (!split_disjoint && split_n_prime != 0) throw ConfigError("--n-prime needs --non-overlapping");
            auto rng = derive_rng(split_seed, {stream::kSplit});
            const auto result = apply_split(source, spec, rng);
            fs::create_directories(out / "lr");
            fs::create_directories(out / "hr");
            for (const auto& p : result.lr_paths) {
                fs::copy_file(p, out / "lr" / p.filename(), fs::copy_options::overwrite_existing);
            }
            for (const auto& p : result.hr_paths) {
                fs::copy_file(p, out / "hr" / p.filename(), fs::copy_options::overwrite_existing);
            }
            log::info("split: ", result.hr_paths.size(), " HR / ", result.lr_paths.size(), " LR images");
        }
    } catch (const ConfigError& e) {
        log::error("config error: ", e.what());
        return 1;
    } catch (const ArgumentError& e) {
        log::error("invalid argument: ", e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(e.what());
        return 2;
    }
    return 0;
}

}  // namespace unpaired_sr
