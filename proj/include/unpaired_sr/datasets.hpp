#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "unpaired_sr/image.hpp"
#include "unpaired_sr/rng.hpp"

namespace unpaired_sr {

namespace fs = std::filesystem;

/// Two independent image sets. Any pairing implied by file names is ignored.
struct UnpairedCorpus {
    std::vector<fs::path> lr_paths;
    std::vector<fs::path> hr_paths;
    ScaleFactor scale{4};
};

enum class SplitMode { basic, non_overlapping };

struct SplitSpec {
    SplitMode mode = SplitMode::basic;
    int64_t n_prime = 0;
};

/// Index sets chosen by a non-overlapping split.
struct SplitIndices {
    std::vector<int64_t> hr;
    std::vector<int64_t> lr;
};

struct GeneratedPair {
    fs::path gen_lr;
    fs::path real_hr;
};

/// (generated LR, real HR) training pairs produced by a frozen degradation generator.
struct GeneratedPairSet {
    std::vector<GeneratedPair> pairs;
    std::string producer;
    ScaleFactor scale{4};
};

/// Sorted list of *.png / *.jpg / *.jpeg files directly inside `dir`.
std::vector<fs::path> list_images(const fs::path& dir);

UnpairedCorpus scan_corpus(const fs::path& lr_dir, const fs::path& hr_dir, ScaleFactor scale);

/// Throws CorpusError when the corpus violates its invariants.
void validate_corpus(const UnpairedCorpus& corpus);

SplitIndices draw_split(int64_t n, int64_t n_prime, Rng& rng);
UnpairedCorpus apply_split(const UnpairedCorpus& corpus, const SplitSpec& split, Rng& rng);

/// Manifest: header `# producer=<id> scale=<s>`, then `gen_lr<TAB>hr` per line.
/// Relative paths in the file are resolved against the manifest's directory.
void write_manifest(const GeneratedPairSet& set, const fs::path& path);
GeneratedPairSet read_manifest(const fs::path& path);

/// Images held in memory for batch sampling.
struct ImageBank {
    std::vector<ImageTensor> images;

    static ImageBank load(const std::vector<fs::path>& paths);
    [[nodiscard]] bool empty() const { return images.empty(); }
    [[nodiscard]] size_t size() const { return images.size(); }
};

struct PairBank {
    std::vector<ImageTensor> lr;
    std::vector<ImageTensor> hr;
    ScaleFactor scale{4};

    static PairBank load(const GeneratedPairSet& set);
    [[nodiscard]] bool empty() const { return lr.empty(); }
};

struct Stage1Batch {
    ImageTensor syn_lr;
    ImageTensor real_lr;
};

struct Stage2Batch {
    ImageTensor gen_lr;
    ImageTensor real_hr;
    ImageTensor real_lr;  ///< empty when the run needs no real-LR stream
};

/// Draws one random crop of `size` from a bank entry large enough to hold it.
ImageTensor sample_crop(const ImageBank& bank, int64_t size, Rng& rng, bool augment);

/// Synthetic half: bicubic-downscaled random HR crops. Real half: independent LR crops.
Stage1Batch stage1_batch(const ImageBank& hr, const ImageBank& lr, ScaleFactor scale, int64_t batch,
                         int64_t patch, Rng& syn_rng, Rng& real_rng, bool augment = false);

/// Paired (gen_lr, real_hr) crops plus an unpaired real-LR stream when `lr` is non-empty.
Stage2Batch stage2_batch(const PairBank& pairs, const ImageBank& lr, int64_t batch, int64_t patch,
                         Rng& pair_rng, Rng& real_rng, bool augment = false);

}  // namespace unpaired_sr
