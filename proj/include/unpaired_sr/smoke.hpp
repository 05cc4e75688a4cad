#pragma once

#include <filesystem>
#include <vector>

#include "unpaired_sr/datasets.hpp"
#include "unpaired_sr/image.hpp"

namespace unpaired_sr {

/// Known-operator degradation used by the smoke world: blur, bicubic downscale, noise.
struct OracleDegradation {
    double blur_sigma = 1.2;
    double noise_sigma = 0.01;
};

struct SmokeCorpusOptions {
    int64_t n = 24;
    int64_t hr_size = 96;
    int scale = 4;
    OracleDegradation degradation{};
    /// HR images kept for training; the remaining indices supply the LR side. 0 picks 2n/3.
    int64_t n_prime = 0;
    uint64_t seed = 0;
};

/// LR image of the training corpus together with its hidden HR original.
struct HeldOutPair {
    fs::path lr;
    fs::path hr;
};

/// Layout under `root`:
///   source/{lr,hr}/img_NNN.png  aligned oracle pairs
///   lr/, hr/                     unpaired training corpus (disjoint index subsets)
///   hidden/pairs.tsv             `lr<TAB>hr` for every LR-side index, evaluation only
struct SmokeCorpus {
    fs::path root;
    UnpairedCorpus train;
    std::vector<HeldOutPair> held_out;
};

/// Mixed gradients, rotated checkers and band-limited noise, values in [0, 1].
ImageTensor procedural_image(int64_t size, Rng& rng);

/// Separable Gaussian blur with reflected borders; sigma 0 returns the input.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

/// clamp(B(blur(hr)) + noise).
ImageTensor oracle_degrade(const ImageTensor& hr, ScaleFactor scale, const OracleDegradation& deg, Rng& noise_rng);

SmokeCorpus make_smoke_corpus(const fs::path& root, const SmokeCorpusOptions& options);

/// Reads hidden/pairs.tsv of a smoke corpus root.
std::vector<HeldOutPair> read_held_out(const fs::path& root);

}  // namespace unpaired_sr
