#include "unpaired_sr/stage1.hpp"

#include "unpaired_sr/log.hpp"

namespace unpaired_sr {

namespace {

std::vector<torch::Tensor> params_of(const torch::nn::Module& m) { return m.parameters(); }

}  // namespace

void Stage1Config::validate() const {
    auto positive = [](int64_t v, const char* name) {
        if (v <= 0) throw ConfigError(std::string("stage1.") + name + " must be positive");
    };
    positive(batch, "batch");
    positive(patch_lr, "patch_lr");
    positive(halve_every, "halve_every");
    positive(d_steps_per_g_step, "d_steps_per_g_step");
    positive(log_every, "log_every");
    if (!(lr0 > 0.0)) throw ConfigError("stage1.lr0 must be positive");
    if (total_steps < 0) throw ConfigError("stage1.total_steps must be non-negative");
    if (history_pool < 0) throw ConfigError("stage1.history_pool must be non-negative");
    if (generator.channels < 1 || generator.n_res_blocks < 0) throw ConfigError("invalid generator spec");
    if (discriminator.base_channels < 1 || discriminator.n_scale_layers < 1) {
        throw ConfigError("invalid discriminator spec");
    }
    if (patch_logit_size(discriminator, patch_lr) < 1) {
        throw ConfigError("stage1.patch_lr " + std::to_string(patch_lr) +
                          " is below the discriminator minimum input " +
                          std::to_string(patch_min_input(discriminator)));
    }
    weights.validate();
}

LossWeights Stage1Config::effective_weights() const {
    auto w = weights;
    if (!cycle) {
        w.w2 = 0.0;
        w.w3 = 0.0;
    }
    return w;
}

nlohmann::json Stage1Config::to_json() const {
    return {{"batch", batch},
            {"patch_lr", patch_lr},
            {"lr0", lr0},
            {"halve_every", halve_every},
            {"weights", unpaired_sr::to_json(weights)},
            {"seed", seed},
            {"d_steps_per_g_step", d_steps_per_g_step},
            {"cycle", cycle},
            {"history_pool", history_pool},
            {"augment", augment},
            {"generator", unpaired_sr::to_json(generator)},
            {"discriminator", unpaired_sr::to_json(discriminator)}};
}

Stage1Trainer::Stage1Trainer(ImageBank hr, ImageBank lr, ScaleFactor scale, Stage1Config cfg)
    : cfg_(std::move(cfg)),
      scale_(scale),
      hr_(std::move(hr)),
      lr_(std::move(lr)),
      pool_real_(cfg_.history_pool),
      pool_syn_(cfg_.history_pool) {
    cfg_.validate();
    if (hr_.empty() || lr_.empty()) throw CorpusError("stage 1 needs both HR and LR images");
    auto init_g = derive_rng(cfg_.seed, {stream::kInitG});
    auto init_d_real = derive_rng(cfg_.seed, {stream::kInitDReal});
    g_ = build_generator(cfg_.generator, init_g);
    d_real_ = build_patch_discriminator(cfg_.discriminator, init_d_real);
    opt_g_ = Adam(*g_);
    opt_d_real_ = Adam(*d_real_);
    if (cfg_.cycle) {
        auto init_f = derive_rng(cfg_.seed, {stream::kInitF});
        auto init_d_syn = derive_rng(cfg_.seed, {stream::kInitDSyn});
        f_ = build_generator(cfg_.generator, init_f);
        d_syn_ = build_patch_discriminator(cfg_.discriminator, init_d_syn);
        opt_f_ = Adam(*f_);
        opt_d_syn_ = Adam(*d_syn_);
    }
}

Stage1Trainer::Stage1Trainer(const UnpairedCorpus& corpus, Stage1Config cfg)
    : Stage1Trainer(ImageBank::load(corpus.hr_paths), ImageBank::load(corpus.lr_paths), corpus.scale,
                    std::move(cfg)) {}

LossReport Stage1Trainer::step() {
    try {
        return step_impl();
    } catch (const NumericError& e) {
        if (!cfg_.diagnostic_dir.empty()) {
            const auto path = cfg_.diagnostic_dir / ("diverged_stage1_step" + std::to_string(step_) + ".ckpt");
            write_checkpoint(state(), path);
            log::error("stage 1 diverged at step ", step_, ": ", e.what(), " (state written to ", path.string(), ")");
        }
        throw;
    }
}

LossReport Stage1Trainer::step_impl() {
    const int64_t k = step_;
    auto syn_rng = derive_rng(cfg_.seed, {stream::kStage1Syn, static_cast<uint64_t>(k)});
    auto real_rng = derive_rng(cfg_.seed, {stream::kStage1Real, static_cast<uint64_t>(k)});
    auto pool_rng = derive_rng(cfg_.seed, {stream::kStage1Pool, static_cast<uint64_t>(k)});
    const auto batch = stage1_batch(hr_, lr_, scale_, cfg_.batch, cfg_.patch_lr, syn_rng, real_rng, cfg_.augment);
    const auto& syn = batch.syn_lr.tensor();
    const auto& real = batch.real_lr.tensor();
    const double lr = lr_at(k, cfg_.lr0, cfg_.halve_every);

    LossReport report;
    report.step = k;
    report.diagnostics["lr"] = lr;

    torch::Tensor fake_real;
    torch::Tensor fake_syn;
    {
        torch::NoGradGuard no_grad;
        fake_real = pool_real_.query(g_(syn), pool_rng);
        if (cfg_.cycle) fake_syn = pool_syn_.query(f_(real), pool_rng);
    }
    for (int d = 0; d < cfg_.d_steps_per_g_step; ++d) {
        opt_d_real_.zero_grad();
        auto loss_real = gan_loss(d_real_(real), d_real_(fake_real), Side::discriminator);
        require_finite(loss_real, "D_real loss");
        loss_real.backward();
        opt_d_real_.step(lr);
        if (d == 0) report.diagnostics["d_real"] = loss_real.item<double>();
        if (cfg_.cycle) {
            opt_d_syn_.zero_grad();
            auto loss_syn = gan_loss(d_syn_(syn), d_syn_(fake_syn), Side::discriminator);
            require_finite(loss_syn, "D_syn loss");
            loss_syn.backward();
            opt_d_syn_.step(lr);
            if (d == 0) report.diagnostics["d_syn"] = loss_syn.item<double>();
        }
    }

    FrozenParams freeze_real(params_of(*d_real_));
    std::optional<FrozenParams> freeze_syn;
    if (cfg_.cycle) freeze_syn.emplace(params_of(*d_syn_));

    opt_g_.zero_grad();
    Stage1Components parts;
    auto gen = g_(syn);
    parts.gan_g = gan_loss({}, d_real_(gen), Side::generator);
    if (cfg_.cycle) {
        opt_f_.zero_grad();
        auto back = f_(real);
        parts.gan_f = gan_loss({}, d_syn_(back), Side::generator);
        parts.cycle = cycle_loss(syn, f_(gen), real, g_(back));
    }
    auto objective = stage1_objective(parts, cfg_.effective_weights());
    require_finite(objective.total, "stage-1 objective");
    objective.total.backward();
    opt_g_.step(lr);
    if (cfg_.cycle) opt_f_.step(lr);

    report.terms = std::move(objective.report.terms);
    report.total = objective.report.total;
    ++step_;
    return report;
}

void Stage1Trainer::run(int64_t last_step, const ReportLog& log, const StepCallback& callback) {
    while (step_ < last_step) {
        const auto report = step();
        log.write(report);
        if (callback) callback(report);
    }
}

TrainState Stage1Trainer::state() const {
    TrainState s;
    s.header.stage = 1;
    s.header.step = step_;
    s.header.seed = cfg_.seed;
    s.header.config_digest = digest_hex(cfg_.to_json().dump());
    s.header.networks = {{"generator", to_json(cfg_.generator)},
                         {"discriminator", to_json(cfg_.discriminator)},
                         {"cycle", cfg_.cycle},
                         {"scale", scale_.value()}};
    s.entries.append(ParamStore::capture(*g_, "G."));
    s.entries.append(ParamStore::capture(*d_real_, "D_real."));
    s.entries.append(opt_g_.save("opt.G."));
    s.entries.append(opt_d_real_.save("opt.D_real."));
    s.entries.append(pool_real_.save("pool.real."));
    if (cfg_.cycle) {
        s.entries.append(ParamStore::capture(*f_, "F."));
        s.entries.append(ParamStore::capture(*d_syn_, "D_syn."));
        s.entries.append(opt_f_.save("opt.F."));
        s.entries.append(opt_d_syn_.save("opt.D_syn."));
        s.entries.append(pool_syn_.save("pool.syn."));
    }
    return s;
}

void Stage1Trainer::restore(const TrainState& s) {
    if (s.header.stage != 1) throw CheckpointError("expected a stage-1 checkpoint");
    if (s.header.config_digest != digest_hex(cfg_.to_json().dump())) {
        throw CheckpointError("checkpoint was produced with a different stage-1 configuration");
    }
    s.entries.restore(*g_, "G.");
    s.entries.restore(*d_real_, "D_real.");
    opt_g_.load(s.entries, "opt.G.");
    opt_d_real_.load(s.entries, "opt.D_real.");
    pool_real_.load(s.entries, "pool.real.");
    if (cfg_.cycle) {
        s.entries.restore(*f_, "F.");
        s.entries.restore(*d_syn_, "D_syn.");
        opt_f_.load(s.entries, "opt.F.");
        opt_d_syn_.load(s.entries, "opt.D_syn.");
        pool_syn_.load(s.entries, "pool.syn.");
    }
    step_ = s.header.step;
}

TrainState train_stage1(const UnpairedCorpus& corpus, const Stage1Config& cfg, std::ostream* log) {
    if (cfg.total_steps <= 0) throw ConfigError("stage1.total_steps must be set to a positive value");
    Stage1Trainer trainer(corpus, cfg);
    trainer.run(cfg.total_steps, ReportLog(log, cfg.log_every, cfg.total_steps - 1));
    return trainer.state();
}

DegradationGenerator load_generator(const TrainState& state) {
    if (state.header.stage != 1) throw CheckpointError("expected a stage-1 checkpoint");
    auto spec = generator_spec_from_json(state.header.networks.at("generator"));
    DegradationGenerator g(spec);
    state.entries.restore(*g, "G.");
    g->eval();
    return g;
}

ImageTensor generate_lr(DegradationGenerator& g, const ImageTensor& hr, ScaleFactor scale) {
    torch::NoGradGuard no_grad;
    const auto syn = bicubic_resize(hr, Ratio::down(scale));
    return ImageTensor(g(syn.tensor()).clamp(0.0, 1.0));
}

GeneratedPairSet synthesize_lr_corpus(DegradationGenerator& g, const std::vector<fs::path>& hr_paths,
                                      ScaleFactor scale, const fs::path& out_dir, const std::string& producer) {
    const int s = scale.value();
    fs::create_directories(out_dir / "lr");
    GeneratedPairSet set;
    set.producer = producer;
    set.scale = scale;
    for (const auto& path : hr_paths) {
        auto hr = load_image(path);
        fs::path hr_path = path;
        const auto h = hr.height() / s * s;
        const auto w = hr.width() / s * s;
        if (h < s || w < s) throw CorpusError("HR image smaller than the scale factor: " + path.string());
        if (h != hr.height() || w != hr.width()) {
            hr = crop(hr, (hr.height() - h) / 2, (hr.width() - w) / 2, h, w);
            fs::create_directories(out_dir / "hr");
            hr_path = out_dir / "hr" / (path.stem().string() + ".png");
            save_image(hr, hr_path);
            log::info("center-cropped ", path.string(), " to ", h, "x", w, " for x", s, " divisibility");
        }
        const auto gen = generate_lr(g, hr, scale);
        const auto lr_path = out_dir / "lr" / (path.stem().string() + ".png");
        save_image(gen, lr_path);
        set.pairs.push_back({lr_path, hr_path});
    }
    write_manifest(set, out_dir / "pairs.tsv");
    return set;
}

}  // namespace unpaired_sr
