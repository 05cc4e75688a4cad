#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "unpaired_sr/datasets.hpp"
#include "unpaired_sr/optim.hpp"
#include "unpaired_sr/training.hpp"

namespace unpaired_sr {

/// Degradation-learning configuration. Full-scale schedule constants are the defaults;
/// desk-scale runs override halve_every and must set total_steps.
struct Stage1Config {
    int64_t batch = 8;
    int64_t patch_lr = 64;
    double lr0 = 1e-4;
    int64_t halve_every = 1'600'000;
    int64_t total_steps = 0;
    LossWeights weights{};
    uint64_t seed = 0;
    int d_steps_per_g_step = 1;
    int64_t log_every = 100;
    /// false runs the GAN-only variant: F and D_syn are never built, w2 and w3 are ignored.
    bool cycle = true;
    /// Discriminator replay-pool capacity; 0 disables it.
    int64_t history_pool = 0;
    bool augment = false;
    GeneratorSpec generator{};
    PatchDiscSpec discriminator{};
    /// Where a diagnostic checkpoint goes when a loss diverges (empty: none).
    std::filesystem::path diagnostic_dir;

    void validate() const;
    /// Weights with the GAN-only mask applied.
    [[nodiscard]] LossWeights effective_weights() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Alternating optimization of (G, F) against (D_real, D_syn).
class Stage1Trainer {
public:
    Stage1Trainer(ImageBank hr, ImageBank lr, ScaleFactor scale, Stage1Config cfg);
    Stage1Trainer(const UnpairedCorpus& corpus, Stage1Config cfg);

    /// One discriminator phase followed by one joint generator update.
    LossReport step();
    /// Steps until `step() == last_step`, reporting through `log` and `callback`.
    void run(int64_t last_step, const ReportLog& log = {}, const StepCallback& callback = {});

    [[nodiscard]] int64_t current_step() const { return step_; }
    [[nodiscard]] const Stage1Config& config() const { return cfg_; }
    [[nodiscard]] ScaleFactor scale() const { return scale_; }

    [[nodiscard]] TrainState state() const;
    void restore(const TrainState& state);

    [[nodiscard]] DegradationGenerator& generator() { return g_; }
    [[nodiscard]] DegradationGenerator& inverse_generator() { return f_; }
    [[nodiscard]] PatchDiscriminator& real_discriminator() { return d_real_; }
    [[nodiscard]] PatchDiscriminator& syn_discriminator() { return d_syn_; }

private:
    LossReport step_impl();

    Stage1Config cfg_;
    ScaleFactor scale_;
    ImageBank hr_;
    ImageBank lr_;
    DegradationGenerator g_{nullptr};
    DegradationGenerator f_{nullptr};
    PatchDiscriminator d_real_{nullptr};
    PatchDiscriminator d_syn_{nullptr};
    Adam opt_g_;
    Adam opt_f_;
    Adam opt_d_real_;
    Adam opt_d_syn_;
    ImagePool pool_real_;
    ImagePool pool_syn_;
    int64_t step_ = 0;
};

/// Runs cfg.total_steps of stage-1 training from scratch.
TrainState train_stage1(const UnpairedCorpus& corpus, const Stage1Config& cfg, std::ostream* log = nullptr);

/// Rebuilds the trained degradation generator G from a stage-1 state.
DegradationGenerator load_generator(const TrainState& state);

/// G(B(hr)) clamped to [0, 1].
ImageTensor generate_lr(DegradationGenerator& g, const ImageTensor& hr, ScaleFactor scale);

/// Writes G(B(hr)) for every HR image into `out_dir/lr`, plus `out_dir/pairs.tsv`.
/// HR images whose size is not divisible by the scale are center-cropped into `out_dir/hr`.
GeneratedPairSet synthesize_lr_corpus(DegradationGenerator& g, const std::vector<fs::path>& hr_paths,
                                      ScaleFactor scale, const fs::path& out_dir, const std::string& producer);

}  // namespace unpaired_sr
