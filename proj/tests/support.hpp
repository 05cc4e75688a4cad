#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "unpaired_sr/image.hpp"
#include "unpaired_sr/stage1.hpp"
#include "unpaired_sr/stage2.hpp"

namespace unpaired_sr::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("unpaired_sr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline ImageTensor random_image(int64_t h, int64_t w, uint64_t seed, int64_t batch = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    auto t = torch::empty({batch, 3, h, w});
    auto* p = t.data_ptr<float>();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = u(rng);
    return ImageTensor(t);
}

/// Random image on the 8-bit grid, so PNG round trips are exact.
inline ImageTensor random_grid_image(int64_t h, int64_t w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 255);
    auto t = torch::empty({1, 3, h, w});
    auto* p = t.data_ptr<float>();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = static_cast<float>(u(rng)) / 255.0f;
    return ImageTensor(t);
}

/// Small stage-1 setup that runs in milliseconds per step.
inline Stage1Config tiny_stage1(uint64_t seed = 7) {
    Stage1Config c;
    c.batch = 2;
    c.patch_lr = 16;
    c.total_steps = 10;
    c.halve_every = 20;
    c.seed = seed;
    c.generator = {2, 8};
    c.discriminator = {8, 2, 3};
    return c;
}

inline Stage2Config tiny_stage2(uint64_t seed = 7) {
    Stage2Config c;
    c.batch = 2;
    c.patch_lr = 8;
    c.total_steps = 10;
    c.halve_every = 20;
    c.seed = seed;
    c.sr = SRNetSpec{1, 1, 8, 2, 4, TapPoint{TapKind::after_group, 1}};
    c.hr_discriminator = {8, 2, 3};
    c.ada_discriminator = {8, 1, 3};
    return c;
}

/// Writes `n` random 8-bit images of the given size as img_<i>.png into `dir`.
inline std::vector<fs::path> write_images(const fs::path& dir, int n, int64_t h, int64_t w, uint64_t seed) {
    fs::create_directories(dir);
    std::vector<fs::path> out;
    for (int i = 0; i < n; ++i) {
        auto p = dir / ("img_" + std::to_string(i) + ".png");
        save_image(random_grid_image(h, w, seed + static_cast<uint64_t>(i)), p);
        out.push_back(p);
    }
    return out;
}

}  // namespace unpaired_sr::testing
