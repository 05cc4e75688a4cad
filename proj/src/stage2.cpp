#include "unpaired_sr/stage2.hpp"

#include <algorithm>

#include "unpaired_sr/log.hpp"

namespace unpaired_sr {

namespace {

struct AblationName {
    Ablation value;
    const char* name;
};

constexpr AblationName kAblations[] = {{Ablation::full, "full"},
                                       {Ablation::bic_input, "bic_input"},
                                       {Ablation::no_ragan, "no_ragan"},
                                       {Ablation::no_gan_real, "no_gan_real"},
                                       {Ablation::no_ada, "no_ada"},
                                       {Ablation::l1_only, "l1_only"}};

/// Tile origins along one axis: stride tile - overlap, the last tile flush with the end.
std::vector<int64_t> tile_starts(int64_t len, int64_t tile, int64_t overlap) {
    if (len <= tile) return {0};
    std::vector<int64_t> starts;
    const int64_t stride = tile - overlap;
    for (int64_t s = 0; s + tile < len; s += stride) starts.push_back(s);
    starts.push_back(len - tile);
    return starts;
}

/// Linear feather over `ramp` output pixels on each side that borders another tile.
torch::Tensor feather(int64_t n, int64_t ramp, bool left, bool right) {
    auto w = torch::ones({n}, torch::kFloat32);
    auto* p = w.data_ptr<float>();
    for (int64_t i = 0; i < n; ++i) {
        float v = 1.0f;
        if (left) v = std::min(v, (static_cast<float>(i) + 0.5f) / static_cast<float>(ramp));
        if (right) v = std::min(v, (static_cast<float>(n - i) - 0.5f) / static_cast<float>(ramp));
        p[i] = v;
    }
    return w;
}

}  // namespace

std::string to_string(Ablation a) {
    for (const auto& e : kAblations) {
        if (e.value == a) return e.name;
    }
    return "full";
}

Ablation parse_ablation(const std::string& text) {
    for (const auto& e : kAblations) {
        if (text == e.name) return e.value;
    }
    throw ConfigError("unknown ablation '" + text +
                      "' (expected full, bic_input, no_ragan, no_gan_real, no_ada or l1_only)");
}

bool Stage2Config::uses_ragan() const { return ablation != Ablation::no_ragan && ablation != Ablation::l1_only; }

bool Stage2Config::uses_gan_real() const {
    return ablation != Ablation::no_gan_real && ablation != Ablation::l1_only;
}

bool Stage2Config::uses_ada() const { return ablation != Ablation::no_ada && ablation != Ablation::l1_only; }

LossWeights Stage2Config::effective_weights() const {
    auto w = weights;
    if (!uses_ragan()) w.lambda2 = 0.0;
    if (!uses_gan_real()) w.lambda3 = 0.0;
    if (!uses_ada()) w.lambda4 = 0.0;
    return w;
}

PatchDiscSpec Stage2Config::ada_spec() const {
    auto spec = ada_discriminator;
    spec.in_channels = sr.channels;
    return spec;
}

void Stage2Config::validate() const {
    auto positive = [](int64_t v, const char* name) {
        if (v <= 0) throw ConfigError(std::string("stage2.") + name + " must be positive");
    };
    positive(batch, "batch");
    positive(patch_lr, "patch_lr");
    positive(halve_every, "halve_every");
    positive(d_steps_per_g_step, "d_steps_per_g_step");
    positive(log_every, "log_every");
    if (!(lr0 > 0.0)) throw ConfigError("stage2.lr0 must be positive");
    if (total_steps < 0) throw ConfigError("stage2.total_steps must be non-negative");
    weights.validate();
    try {
        SRNetwork probe(sr);
    } catch (const SpecError& e) {
        throw ConfigError(std::string("networks: ") + e.what());
    }
    const auto hr_patch = patch_lr * sr.scale;
    if ((uses_ragan() || uses_gan_real()) && patch_logit_size(hr_discriminator, hr_patch) < 1) {
        throw ConfigError("HR patch " + std::to_string(hr_patch) + " is below the HR discriminator minimum input " +
                          std::to_string(patch_min_input(hr_discriminator)));
    }
    if (uses_ada() && patch_logit_size(ada_spec(), patch_lr) < 1) {
        throw ConfigError("stage2.patch_lr " + std::to_string(patch_lr) +
                          " is below the feature discriminator minimum input " +
                          std::to_string(patch_min_input(ada_spec())));
    }
}

nlohmann::json Stage2Config::to_json() const {
    return {{"batch", batch},
            {"patch_lr", patch_lr},
            {"lr0", lr0},
            {"halve_every", halve_every},
            {"weights", unpaired_sr::to_json(weights)},
            {"seed", seed},
            {"d_steps_per_g_step", d_steps_per_g_step},
            {"ablation", to_string(ablation)},
            {"augment", augment},
            {"sr", unpaired_sr::to_json(sr)},
            {"hr_discriminator", unpaired_sr::to_json(hr_discriminator)},
            {"ada_discriminator", unpaired_sr::to_json(ada_spec())}};
}

Stage2Trainer::Stage2Trainer(PairBank pairs, ImageBank real_lr, Stage2Config cfg)
    : cfg_(std::move(cfg)), pairs_(std::move(pairs)), real_lr_(std::move(real_lr)) {
    cfg_.validate();
    if (pairs_.empty()) throw CorpusError("stage 2 needs a non-empty generated pair set");
    if (pairs_.scale.value() != cfg_.sr.scale) {
        throw ConfigError("pair set scale x" + std::to_string(pairs_.scale.value()) + " differs from SR scale x" +
                          std::to_string(cfg_.sr.scale));
    }
    if (cfg_.needs_real_lr() && real_lr_.empty()) {
        throw ConfigError("ablation '" + to_string(cfg_.ablation) + "' needs a real-LR corpus");
    }
    if (!cfg_.needs_real_lr()) real_lr_ = {};
    if (cfg_.ablation == Ablation::bic_input) {
        for (size_t i = 0; i < pairs_.hr.size(); ++i) {
            pairs_.lr[i] = bicubic_resize(pairs_.hr[i], Ratio::down(pairs_.scale));
        }
    }
    auto init_r = derive_rng(cfg_.seed, {stream::kInitR});
    r_ = build_sr_network(cfg_.sr, init_r);
    opt_r_ = Adam(*r_);
    if (cfg_.uses_ragan()) {
        auto rng = derive_rng(cfg_.seed, {stream::kInitDRa});
        d_ra_ = build_patch_discriminator(cfg_.hr_discriminator, rng);
        opt_ra_ = Adam(*d_ra_);
    }
    if (cfg_.uses_gan_real()) {
        auto rng = derive_rng(cfg_.seed, {stream::kInitDHr});
        d_hr_ = build_patch_discriminator(cfg_.hr_discriminator, rng);
        opt_hr_ = Adam(*d_hr_);
    }
    if (cfg_.uses_ada()) {
        auto rng = derive_rng(cfg_.seed, {stream::kInitDAda});
        d_ada_ = build_patch_discriminator(cfg_.ada_spec(), rng);
        opt_ada_ = Adam(*d_ada_);
    }
}

Stage2Trainer::Stage2Trainer(const GeneratedPairSet& pairs, const UnpairedCorpus& corpus, Stage2Config cfg)
    : Stage2Trainer(PairBank::load(pairs), cfg.needs_real_lr() ? ImageBank::load(corpus.lr_paths) : ImageBank{},
                    cfg) {}

LossReport Stage2Trainer::step() {
    try {
        return step_impl();
    } catch (const NumericError& e) {
        if (!cfg_.diagnostic_dir.empty()) {
            const auto path = cfg_.diagnostic_dir / ("diverged_stage2_step" + std::to_string(step_) + ".ckpt");
            write_checkpoint(state(), path);
            log::error("stage 2 diverged at step ", step_, ": ", e.what(), " (state written to ", path.string(), ")");
        }
        throw;
    }
}

LossReport Stage2Trainer::step_impl() {
    const int64_t k = step_;
    auto pair_rng = derive_rng(cfg_.seed, {stream::kStage2Pairs, static_cast<uint64_t>(k)});
    auto real_rng = derive_rng(cfg_.seed, {stream::kStage2Real, static_cast<uint64_t>(k)});
    const auto batch = stage2_batch(pairs_, real_lr_, cfg_.batch, cfg_.patch_lr, pair_rng, real_rng, cfg_.augment);
    const auto& gen_lr = batch.gen_lr.tensor();
    const auto& hr = batch.real_hr.tensor();
    const double lr = lr_at(k, cfg_.lr0, cfg_.halve_every);

    LossReport report;
    report.step = k;
    report.diagnostics["lr"] = lr;

    auto out_gen = r_(gen_lr);
    SROutput out_real;
    if (cfg_.needs_real_lr()) out_real = r_(batch.real_lr.tensor());

    for (int d = 0; d < cfg_.d_steps_per_g_step; ++d) {
        if (cfg_.uses_ragan()) {
            opt_ra_.zero_grad();
            auto loss = ragan_loss(d_ra_(hr), d_ra_(out_gen.sr.detach()), Side::discriminator);
            require_finite(loss, "D_Ra loss");
            loss.backward();
            opt_ra_.step(lr);
            if (d == 0) report.diagnostics["d_ragan"] = loss.item<double>();
        }
        if (cfg_.uses_gan_real()) {
            opt_hr_.zero_grad();
            auto loss = gan_real_hr_loss(d_hr_(hr), d_hr_(out_real.sr.detach()), Side::discriminator);
            require_finite(loss, "D_HR loss");
            loss.backward();
            opt_hr_.step(lr);
            if (d == 0) report.diagnostics["d_hr"] = loss.item<double>();
        }
        if (cfg_.uses_ada()) {
            opt_ada_.zero_grad();
            auto loss = adaptive_feature_loss(d_ada_(out_gen.features.detach()), d_ada_(out_real.features.detach()),
                                              Side::discriminator);
            require_finite(loss, "D_ada loss");
            loss.backward();
            opt_ada_.step(lr);
            if (d == 0) report.diagnostics["d_ada"] = loss.item<double>();
        }
    }

    std::vector<torch::Tensor> frozen;
    for (const auto* d : {&d_ra_, &d_hr_, &d_ada_}) {
        if (!d->is_empty()) {
            auto ps = (*d)->parameters();
            frozen.insert(frozen.end(), ps.begin(), ps.end());
        }
    }
    FrozenParams freeze(std::move(frozen));

    Stage2Components parts;
    parts.l1 = l1_content_loss(out_gen.sr, hr);
    if (cfg_.uses_ragan()) parts.ragan = ragan_loss(d_ra_(hr), d_ra_(out_gen.sr), Side::generator);
    if (cfg_.uses_gan_real()) parts.gan_real = gan_real_hr_loss({}, d_hr_(out_real.sr), Side::generator);
    if (cfg_.uses_ada()) {
        parts.ada = adaptive_feature_loss(d_ada_(out_gen.features), d_ada_(out_real.features), Side::generator);
    }
    auto objective = stage2_objective(parts, cfg_.effective_weights());
    require_finite(objective.total, "stage-2 objective");
    opt_r_.zero_grad();
    objective.total.backward();
    opt_r_.step(lr);

    report.terms = std::move(objective.report.terms);
    report.total = objective.report.total;
    ++step_;
    return report;
}

void Stage2Trainer::run(int64_t last_step, const ReportLog& log, const StepCallback& callback) {
    while (step_ < last_step) {
        const auto report = step();
        log.write(report);
        if (callback) callback(report);
    }
}

TrainState Stage2Trainer::state() const {
    TrainState s;
    s.header.stage = 2;
    s.header.step = step_;
    s.header.seed = cfg_.seed;
    s.header.config_digest = digest_hex(cfg_.to_json().dump());
    s.header.networks = {{"sr", to_json(cfg_.sr)},
                         {"hr_discriminator", to_json(cfg_.hr_discriminator)},
                         {"ada_discriminator", to_json(cfg_.ada_spec())},
                         {"ablation", to_string(cfg_.ablation)}};
    s.entries.append(ParamStore::capture(*r_, "R."));
    s.entries.append(opt_r_.save("opt.R."));
    if (cfg_.uses_ragan()) {
        s.entries.append(ParamStore::capture(*d_ra_, "D_Ra."));
        s.entries.append(opt_ra_.save("opt.D_Ra."));
    }
    if (cfg_.uses_gan_real()) {
        s.entries.append(ParamStore::capture(*d_hr_, "D_HR."));
        s.entries.append(opt_hr_.save("opt.D_HR."));
    }
    if (cfg_.uses_ada()) {
        s.entries.append(ParamStore::capture(*d_ada_, "D_ada."));
        s.entries.append(opt_ada_.save("opt.D_ada."));
    }
    return s;
}

void Stage2Trainer::restore(const TrainState& s) {
    if (s.header.stage != 2) throw CheckpointError("expected a stage-2 checkpoint");
    if (s.header.config_digest != digest_hex(cfg_.to_json().dump())) {
        throw CheckpointError("checkpoint was produced with a different stage-2 configuration");
    }
    s.entries.restore(*r_, "R.");
    opt_r_.load(s.entries, "opt.R.");
    if (cfg_.uses_ragan()) {
        s.entries.restore(*d_ra_, "D_Ra.");
        opt_ra_.load(s.entries, "opt.D_Ra.");
    }
    if (cfg_.uses_gan_real()) {
        s.entries.restore(*d_hr_, "D_HR.");
        opt_hr_.load(s.entries, "opt.D_HR.");
    }
    if (cfg_.uses_ada()) {
        s.entries.restore(*d_ada_, "D_ada.");
        opt_ada_.load(s.entries, "opt.D_ada.");
    }
    step_ = s.header.step;
}

TrainState train_stage2(const GeneratedPairSet& pairs, const UnpairedCorpus& corpus, const Stage2Config& cfg,
                        std::ostream* log) {
    if (cfg.total_steps <= 0) throw ConfigError("stage2.total_steps must be set to a positive value");
    Stage2Trainer trainer(pairs, corpus, cfg);
    trainer.run(cfg.total_steps, ReportLog(log, cfg.log_every, cfg.total_steps - 1));
    return trainer.state();
}

SRNetwork load_sr_network(const TrainState& state) {
    if (state.header.stage != 2) throw CheckpointError("expected a stage-2 checkpoint");
    SRNetwork r(sr_spec_from_json(state.header.networks.at("sr")));
    state.entries.restore(*r, "R.");
    r->eval();
    return r;
}

ImageTensor super_resolve(SRNetwork& r, const ImageTensor& img, TileOptions tiles) {
    if (img.height() < 8 || img.width() < 8) throw ArgumentError("super_resolve needs an input of at least 8x8");
    if (tiles.tile < 8 || tiles.overlap < 0 || tiles.overlap >= tiles.tile) {
        throw ArgumentError("tile must be >= 8 and overlap in [0, tile)");
    }
    torch::NoGradGuard no_grad;
    const int64_t s = r->spec().scale;
    const int64_t h = img.height();
    const int64_t w = img.width();
    const auto ys = tile_starts(h, tiles.tile, tiles.overlap);
    const auto xs = tile_starts(w, tiles.tile, tiles.overlap);
    const int64_t ramp = std::max<int64_t>(1, tiles.overlap * s);

    std::vector<torch::Tensor> results;
    for (int64_t b = 0; b < img.batch(); ++b) {
        const auto input = img.tensor().narrow(0, b, 1);
        if (ys.size() == 1 && xs.size() == 1) {
            results.push_back(r(input).sr.clamp(0.0, 1.0));
            continue;
        }
        auto acc = torch::zeros({1, 3, h * s, w * s});
        auto weight = torch::zeros({1, 1, h * s, w * s});
        for (size_t iy = 0; iy < ys.size(); ++iy) {
            for (size_t ix = 0; ix < xs.size(); ++ix) {
                const int64_t th = std::min(tiles.tile, h);
                const int64_t tw = std::min(tiles.tile, w);
                const auto patch = input.narrow(2, ys[iy], th).narrow(3, xs[ix], tw);
                const auto out = r(patch).sr;
                const auto wy = feather(th * s, ramp, iy > 0, iy + 1 < ys.size());
                const auto wx = feather(tw * s, ramp, ix > 0, ix + 1 < xs.size());
                const auto mask = (wy.unsqueeze(1) * wx.unsqueeze(0)).view({1, 1, th * s, tw * s});
                acc.narrow(2, ys[iy] * s, th * s).narrow(3, xs[ix] * s, tw * s).add_(out * mask);
                weight.narrow(2, ys[iy] * s, th * s).narrow(3, xs[ix] * s, tw * s).add_(mask);
            }
        }
        results.push_back((acc / weight).clamp(0.0, 1.0));
    }
    return ImageTensor(torch::cat(results, 0));
}

}  // namespace unpaired_sr
