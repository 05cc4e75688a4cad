#include "unpaired_sr/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>


namespace unpaired_sr {

namespace {

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<size_t> eligible(const std::vector<ImageTensor>& images, int64_t size) {
    std::vector<size_t> out;
    for (size_t i = 0; i < images.size(); ++i) {
        if (images[i].height() >= size && images[i].width() >= size) out.push_back(i);
    }
    return out;
}

size_t pick(const std::vector<size_t>& candidates, Rng& rng) {
    std::uniform_int_distribution<size_t> dist(0, candidates.size() - 1);
    return candidates[dist(rng)];
}

fs::path resolve_against(const fs::path& base, const std::string& entry) {
    fs::path p(entry);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw CorpusError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void validate_corpus(const UnpairedCorpus& corpus) {
    if (corpus.lr_paths.empty()) throw CorpusError("LR image list is empty");
    if (corpus.hr_paths.empty()) throw CorpusError("HR image list is empty");
    std::set<fs::path> lr;
    for (const auto& p : corpus.lr_paths) lr.insert(fs::weakly_canonical(p));
    for (const auto& p : corpus.hr_paths) {
        if (lr.count(fs::weakly_canonical(p)) != 0) {
            throw CorpusError("image appears in both LR and HR sets: " + p.string());
        }
    }
}

UnpairedCorpus scan_corpus(const fs::path& lr_dir, const fs::path& hr_dir, ScaleFactor scale) {
    UnpairedCorpus corpus{list_images(lr_dir), list_images(hr_dir), scale};
    if (corpus.lr_paths.empty()) throw CorpusError("no images in " + lr_dir.string());
    if (corpus.hr_paths.empty()) throw CorpusError("no images in " + hr_dir.string());
    validate_corpus(corpus);
    return corpus;
}

SplitIndices draw_split(int64_t n, int64_t n_prime, Rng& rng) {
    if (n_prime <= 0 || n_prime >= n) {
        throw ArgumentError("n' must satisfy 0 < n' < " + std::to_string(n) + ", got " + std::to_string(n_prime));
    }
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    SplitIndices split;
    split.hr.assign(order.begin(), order.begin() + n_prime);
    split.lr.assign(order.begin() + n_prime, order.end());
    std::sort(split.hr.begin(), split.hr.end());
    std::sort(split.lr.begin(), split.lr.end());
    return split;
}

UnpairedCorpus apply_split(const UnpairedCorpus& corpus, const SplitSpec& split, Rng& rng) {
    if (split.mode == SplitMode::basic) return corpus;
    if (corpus.lr_paths.size() != corpus.hr_paths.size()) {
        throw ArgumentError("non-overlapping split needs equally sized LR and HR source lists");
    }
    const auto n = static_cast<int64_t>(corpus.hr_paths.size());
    const auto idx = draw_split(n, split.n_prime, rng);
    UnpairedCorpus out{{}, {}, corpus.scale};
    for (auto i : idx.hr) out.hr_paths.push_back(corpus.hr_paths[static_cast<size_t>(i)]);
    for (auto i : idx.lr) out.lr_paths.push_back(corpus.lr_paths[static_cast<size_t>(i)]);
    return out;
}

void write_manifest(const GeneratedPairSet& set, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    const auto base = fs::absolute(path).parent_path();
    auto rel = [&base](const fs::path& p) {
        auto r = fs::absolute(p).lexically_relative(base);
        return r.empty() ? fs::absolute(p) : r;
    };
    out << "# producer=" << set.producer << " scale=" << set.scale.value() << "\n";
    for (const auto& pair : set.pairs) out << rel(pair.gen_lr).string() << '\t' << rel(pair.real_hr).string() << '\n';
    if (!out) throw IoError("failed writing manifest " + path.string());
}

GeneratedPairSet read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest " + path.string());
    const auto base = fs::absolute(path).parent_path();
    GeneratedPairSet set;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream fields(line.substr(1));
            std::string field;
            while (fields >> field) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                const auto key = field.substr(0, eq);
                const auto value = field.substr(eq + 1);
                if (key == "producer") set.producer = value;
                if (key == "scale") set.scale = ScaleFactor(std::stoi(value));
            }
            header_seen = true;
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": expected gen_lr<TAB>hr");
        }
        set.pairs.push_back({resolve_against(base, line.substr(0, tab)), resolve_against(base, line.substr(tab + 1))});
    }
    if (!header_seen) throw CorpusError(path.string() + ": missing '# producer=... scale=...' header");
    return set;
}

ImageBank ImageBank::load(const std::vector<fs::path>& paths) {
    ImageBank bank;
    bank.images.reserve(paths.size());
    for (const auto& p : paths) bank.images.push_back(load_image(p));
    return bank;
}

PairBank PairBank::load(const GeneratedPairSet& set) {
    PairBank bank;
    bank.scale = set.scale;
    const int s = set.scale.value();
    for (const auto& pair : set.pairs) {
        auto lr = load_image(pair.gen_lr);
        auto hr = load_image(pair.real_hr);
        if (hr.height() != lr.height() * s || hr.width() != lr.width() * s) {
            throw CorpusError("pair violates the x" + std::to_string(s) + " size relation: " + pair.gen_lr.string());
        }
        bank.lr.push_back(std::move(lr));
        bank.hr.push_back(std::move(hr));
    }
    return bank;
}

ImageTensor sample_crop(const ImageBank& bank, int64_t size, Rng& rng, bool augment_patch) {
    const auto candidates = eligible(bank.images, size);
    if (candidates.empty()) {
        throw CorpusError("no image is at least " + std::to_string(size) + "x" + std::to_string(size));
    }
    auto patch = random_crop(bank.images[pick(candidates, rng)], size, rng);
    return augment_patch ? augment(patch, rng) : patch;
}

Stage1Batch stage1_batch(const ImageBank& hr, const ImageBank& lr, ScaleFactor scale, int64_t batch,
                         int64_t patch, Rng& syn_rng, Rng& real_rng, bool augment_patches) {
    if (batch < 1 || patch < 1) throw ArgumentError("batch and patch must be positive");
    std::vector<ImageTensor> syn;
    std::vector<ImageTensor> real;
    const auto down = Ratio::down(scale);
    for (int64_t i = 0; i < batch; ++i) {
        syn.push_back(bicubic_resize(sample_crop(hr, patch * scale.value(), syn_rng, augment_patches), down));
    }
    for (int64_t i = 0; i < batch; ++i) real.push_back(sample_crop(lr, patch, real_rng, augment_patches));
    return {stack_batch(syn), stack_batch(real)};
}

Stage2Batch stage2_batch(const PairBank& pairs, const ImageBank& lr, int64_t batch, int64_t patch,
                         Rng& pair_rng, Rng& real_rng, bool augment_patches) {
    if (pairs.empty()) throw CorpusError("generated pair set is empty");
    if (batch < 1 || patch < 1) throw ArgumentError("batch and patch must be positive");
    const auto candidates = eligible(pairs.lr, patch);
    if (candidates.empty()) {
        throw CorpusError("no generated LR image is at least " + std::to_string(patch) + "x" + std::to_string(patch));
    }
    std::vector<ImageTensor> gen;
    std::vector<ImageTensor> hr;
    for (int64_t i = 0; i < batch; ++i) {
        const auto k = pick(candidates, pair_rng);
        auto crops = paired_crop(pairs.hr[k], pairs.lr[k], patch, pairs.scale, pair_rng);
        if (augment_patches) {
            const auto flags = draw_augment(pair_rng);
            crops.hr = apply_augment(crops.hr, flags);
            crops.lr = apply_augment(crops.lr, flags);
        }
        gen.push_back(std::move(crops.lr));
        hr.push_back(std::move(crops.hr));
    }
    Stage2Batch out{stack_batch(gen), stack_batch(hr), {}};
    if (!lr.empty()) {
        std::vector<ImageTensor> real;
        for (int64_t i = 0; i < batch; ++i) real.push_back(sample_crop(lr, patch, real_rng, augment_patches));
        out.real_lr = stack_batch(real);
    }
    return out;
}

}  // namespace unpaired_sr
