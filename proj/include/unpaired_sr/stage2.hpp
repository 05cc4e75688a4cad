#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "unpaired_sr/datasets.hpp"
#include "unpaired_sr/optim.hpp"
#include "unpaired_sr/training.hpp"

namespace unpaired_sr {

/// Training variants: full pipeline, bicubic input instead of generated LR, and single-term removals.
enum class Ablation { full, bic_input, no_ragan, no_gan_real, no_ada, l1_only };

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& text);

struct Stage2Config {
    int64_t batch = 8;
    int64_t patch_lr = 64;
    double lr0 = 1e-4;
    int64_t halve_every = 1'600'000;
    int64_t total_steps = 0;
    LossWeights weights{};
    uint64_t seed = 0;
    int d_steps_per_g_step = 1;
    int64_t log_every = 100;
    Ablation ablation = Ablation::full;
    bool augment = false;
    SRNetSpec sr{};
    /// Image discriminators: the relativistic backbone C and D_HR.
    PatchDiscSpec hr_discriminator{};
    /// Feature discriminator on the tap output; in_channels follows sr.channels.
    PatchDiscSpec ada_discriminator{};
    std::filesystem::path diagnostic_dir;

    void validate() const;
    [[nodiscard]] LossWeights effective_weights() const;
    [[nodiscard]] bool uses_ragan() const;
    [[nodiscard]] bool uses_gan_real() const;
    [[nodiscard]] bool uses_ada() const;
    /// True when some active term consumes R(real LR).
    [[nodiscard]] bool needs_real_lr() const { return uses_gan_real() || uses_ada(); }
    [[nodiscard]] PatchDiscSpec ada_spec() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Degradation-adaptive SR training on (generated LR, HR) pairs plus an unpaired real-LR stream.
class Stage2Trainer {
public:
    /// `real_lr` may be empty only when no active term needs it.
    Stage2Trainer(PairBank pairs, ImageBank real_lr, Stage2Config cfg);
    Stage2Trainer(const GeneratedPairSet& pairs, const UnpairedCorpus& corpus, Stage2Config cfg);

    LossReport step();
    void run(int64_t last_step, const ReportLog& log = {}, const StepCallback& callback = {});

    [[nodiscard]] int64_t current_step() const { return step_; }
    [[nodiscard]] const Stage2Config& config() const { return cfg_; }
    [[nodiscard]] TrainState state() const;
    void restore(const TrainState& state);

    [[nodiscard]] SRNetwork& network() { return r_; }
    [[nodiscard]] PatchDiscriminator& ragan_discriminator() { return d_ra_; }
    [[nodiscard]] PatchDiscriminator& hr_discriminator() { return d_hr_; }
    [[nodiscard]] PatchDiscriminator& ada_discriminator() { return d_ada_; }

private:
    LossReport step_impl();

    Stage2Config cfg_;
    PairBank pairs_;
    ImageBank real_lr_;
    SRNetwork r_{nullptr};
    PatchDiscriminator d_ra_{nullptr};
    PatchDiscriminator d_hr_{nullptr};
    PatchDiscriminator d_ada_{nullptr};
    Adam opt_r_;
    Adam opt_ra_;
    Adam opt_hr_;
    Adam opt_ada_;
    int64_t step_ = 0;
};

TrainState train_stage2(const GeneratedPairSet& pairs, const UnpairedCorpus& corpus, const Stage2Config& cfg,
                        std::ostream* log = nullptr);

SRNetwork load_sr_network(const TrainState& state);

struct TileOptions {
    int64_t tile = 128;    ///< LR pixels per tile side
    int64_t overlap = 16;  ///< LR pixels shared by neighbouring tiles
};

/// Tiled, feather-blended inference; output is (h*s, w*s) clamped to [0, 1].
ImageTensor super_resolve(SRNetwork& r, const ImageTensor& img, TileOptions tiles = {});

}  // namespace unpaired_sr
