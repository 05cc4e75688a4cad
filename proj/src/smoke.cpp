#include "unpaired_sr/smoke.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace unpaired_sr {

namespace {

std::string image_name(int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%03lld.png", static_cast<long long>(i));
    return buf;
}

torch::Tensor random_color(Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    return torch::tensor({u(rng), u(rng), u(rng)}, torch::kFloat64).view({3, 1, 1});
}

}  // namespace

ImageTensor procedural_image(int64_t size, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    const auto coords = torch::arange(size, opts);
    const auto yy = coords.view({size, 1}).expand({size, size});
    const auto xx = coords.view({1, size}).expand({size, size});

    // Linear colour gradient along a random direction.
    const double theta = unit(rng) * 2.0 * std::numbers::pi;
    auto t = (std::cos(theta) * xx + std::sin(theta) * yy);
    t = (t - t.min()) / (t.max() - t.min() + 1e-12);
    const auto c0 = random_color(rng);
    const auto c1 = random_color(rng);
    auto img = c0 + (c1 - c0) * t.unsqueeze(0);

    // Rotated checkerboards and stripes inside random rectangles.
    for (int k = 0; k < 4; ++k) {
        const double period = 4.0 + unit(rng) * 10.0;
        const double angle = unit(rng) * std::numbers::pi;
        const auto xr = std::cos(angle) * xx + std::sin(angle) * yy;
        const auto yr = -std::sin(angle) * xx + std::cos(angle) * yy;
        const bool stripes = unit(rng) < 0.3;
        const auto cells = stripes ? torch::floor(xr / period) : torch::floor(xr / period) + torch::floor(yr / period);
        const auto checker = torch::remainder(cells, 2.0);
        const auto ca = random_color(rng);
        const auto cb = random_color(rng);
        const auto pattern = ca + (cb - ca) * checker.unsqueeze(0);
        const double rect_h = (0.3 + 0.4 * unit(rng)) * static_cast<double>(size);
        const double rect_w = (0.3 + 0.4 * unit(rng)) * static_cast<double>(size);
        const double top = unit(rng) * (static_cast<double>(size) - rect_h);
        const double left = unit(rng) * (static_cast<double>(size) - rect_w);
        const auto inside =
            ((yy >= top) & (yy < top + rect_h) & (xx >= left) & (xx < left + rect_w)).to(torch::kFloat64);
        const double alpha = 0.6 + 0.4 * unit(rng);
        img = img + alpha * inside.unsqueeze(0) * (pattern - img);
    }

    // Band-limited noise: coarse random grid, bicubic upsampled.
    const int64_t coarse = std::max<int64_t>(2, size / 8);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto grid = torch::empty({1, 3, coarse, coarse}, opts);
    auto* g = grid.data_ptr<double>();
    for (int64_t i = 0; i < grid.numel(); ++i) g[i] = 0.5 + 0.15 * normal(rng);
    const auto texture = bicubic_resize(ImageTensor(grid.clamp(0.0, 1.0)), Ratio{static_cast<int>(size), static_cast<int>(coarse)});
    const auto tex = texture.tensor()[0].to(torch::kFloat64).narrow(1, 0, size).narrow(2, 0, size);
    img = img + 0.6 * (tex - 0.5);

    return ImageTensor(img.clamp(0.0, 1.0).unsqueeze(0).to(torch::kFloat32));
}

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
    if (sigma < 0.0) throw ArgumentError("blur sigma must be non-negative");
    if (sigma == 0.0) return img;
    const auto radius = static_cast<int64_t>(std::ceil(3.0 * sigma));
    auto taps = torch::arange(-radius, radius + 1, torch::kFloat64);
    auto kernel = torch::exp(-taps.pow(2) / (2.0 * sigma * sigma));
    kernel = kernel / kernel.sum();
    namespace F = torch::nn::functional;
    auto x = img.tensor().to(torch::kFloat64);
    const auto channels = x.size(1);
    const auto kx = kernel.view({1, 1, 1, -1}).repeat({channels, 1, 1, 1});
    const auto ky = kernel.view({1, 1, -1, 1}).repeat({channels, 1, 1, 1});
    x = F::pad(x, F::PadFuncOptions({radius, radius, radius, radius}).mode(torch::kReflect));
    x = F::conv2d(x, kx, F::Conv2dFuncOptions().groups(channels));
    x = F::conv2d(x, ky, F::Conv2dFuncOptions().groups(channels));
    return ImageTensor(x.to(torch::kFloat32));
}

ImageTensor oracle_degrade(const ImageTensor& hr, ScaleFactor scale, const OracleDegradation& deg, Rng& noise_rng) {
    if (deg.noise_sigma < 0.0) throw ArgumentError("noise sigma must be non-negative");
    auto lr = bicubic_resize(gaussian_blur(hr, deg.blur_sigma), Ratio::down(scale));
    if (deg.noise_sigma == 0.0) return lr;
    auto noisy = lr.tensor().clone();
    std::normal_distribution<float> normal(0.0f, static_cast<float>(deg.noise_sigma));
    auto* p = noisy.data_ptr<float>();
    for (int64_t i = 0; i < noisy.numel(); ++i) p[i] += normal(noise_rng);
    return ImageTensor(noisy.clamp(0.0, 1.0));
}

SmokeCorpus make_smoke_corpus(const fs::path& root, const SmokeCorpusOptions& o) {
    if (o.n < 2) throw ArgumentError("smoke corpus needs n >= 2");
    const ScaleFactor scale(o.scale);
    if (o.hr_size < o.scale || o.hr_size % o.scale != 0) {
        throw ArgumentError("hr_size must be a positive multiple of the scale");
    }
    const int64_t n_prime = o.n_prime > 0 ? o.n_prime : std::clamp<int64_t>((2 * o.n + 1) / 3, 1, o.n - 1);
    for (const auto* dir : {"source/lr", "source/hr", "lr", "hr", "hidden"}) fs::create_directories(root / dir);

    UnpairedCorpus source{{}, {}, scale};
    for (int64_t i = 0; i < o.n; ++i) {
        auto content_rng = derive_rng(o.seed, {stream::kSmoke, static_cast<uint64_t>(i)});
        auto noise_rng = derive_rng(o.seed, {stream::kSmoke, 1'000'000 + static_cast<uint64_t>(i)});
        const auto hr = procedural_image(o.hr_size, content_rng);
        const auto lr = oracle_degrade(hr, scale, o.degradation, noise_rng);
        const auto name = image_name(i);
        save_image(hr, root / "source/hr" / name);
        save_image(lr, root / "source/lr" / name);
        source.hr_paths.push_back(root / "source/hr" / name);
        source.lr_paths.push_back(root / "source/lr" / name);
    }

    auto split_rng = derive_rng(o.seed, {stream::kSplit});
    const auto idx = draw_split(o.n, n_prime, split_rng);
    SmokeCorpus corpus{root, {{}, {}, scale}, {}};
    for (auto i : idx.hr) {
        const auto name = image_name(i);
        fs::copy_file(source.hr_paths[static_cast<size_t>(i)], root / "hr" / name, fs::copy_options::overwrite_existing);
        corpus.train.hr_paths.push_back(root / "hr" / name);
    }
    std::ofstream manifest(root / "hidden/pairs.tsv");
    for (auto i : idx.lr) {
        const auto name = image_name(i);
        fs::copy_file(source.lr_paths[static_cast<size_t>(i)], root / "lr" / name, fs::copy_options::overwrite_existing);
        corpus.train.lr_paths.push_back(root / "lr" / name);
        corpus.held_out.push_back({root / "lr" / name, root / "source/hr" / name});
        manifest << "lr/" << name << '\t' << "source/hr/" << name << '\n';
    }
    if (!manifest) throw IoError("cannot write " + (root / "hidden/pairs.tsv").string());
    return corpus;
}

std::vector<HeldOutPair> read_held_out(const fs::path& root) {
    std::ifstream in(root / "hidden/pairs.tsv");
    if (!in) throw IoError("missing hidden manifest under " + root.string());
    std::vector<HeldOutPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        pairs.push_back({root / line.substr(0, tab), root / line.substr(tab + 1)});
    }
    return pairs;
}

}  // namespace unpaired_sr
