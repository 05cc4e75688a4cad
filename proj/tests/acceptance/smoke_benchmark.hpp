#pragma once

#include <filesystem>
#include <string>

#include "unpaired_sr/stage1.hpp"
#include "unpaired_sr/stage2.hpp"

namespace unpaired_sr::acceptance {

struct SmokeSettings {
    int64_t n = 24;
    int64_t hr_size = 96;
    int scale = 4;
    int64_t n_prime = 16;
    double blur_sigma = 1.2;
    double noise_sigma = 0.01;
    Stage1Config stage1;
    Stage2Config stage2;
    /// Diagnostic: train stage 2 on oracle-degraded pairs instead of G's output.
    bool oracle_pairs = false;
};

/// Tiny networks and desk-scale schedules for the smoke world.
SmokeSettings default_smoke_settings();

struct SeedResult {
    uint64_t seed = 0;
    double gen_lr_psnr = 0.0;  ///< mean PSNR(G(B(hr)), oracle LR) over held-out images
    double bic_lr_psnr = 0.0;  ///< mean PSNR(B(hr), oracle LR)
    double sr_psnr = 0.0;      ///< mean PSNR(R(oracle LR), hr), border-cropped
    double bic_up_psnr = 0.0;  ///< mean PSNR(bicubic up(oracle LR), hr), border-cropped
    uint64_t sr_checksum = 0;
    double seconds = 0.0;
};

/// Builds the corpus under `work_dir`, trains both stages and measures the held-out images.
/// `ablation` applies to stage 2 only.
SeedResult run_smoke_seed(const SmokeSettings& settings, uint64_t seed, const std::filesystem::path& work_dir,
                          Ablation ablation = Ablation::full);

}  // namespace unpaired_sr::acceptance
