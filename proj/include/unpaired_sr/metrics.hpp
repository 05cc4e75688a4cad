#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unpaired_sr/image.hpp"

namespace unpaired_sr {

/// PSNR in dB with peak 1.0; std::nullopt stands for +infinity (identical inputs).
std::optional<double> psnr(const ImageTensor& a, const ImageTensor& b);

/// Mean squared error over every element, in double precision.
double mse(const ImageTensor& a, const ImageTensor& b);

/// Rec.601 luma of batch element `index`, row-major (height * width).
std::vector<double> luminance(const ImageTensor& img, int64_t index = 0);

/// SSIM on luminance: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2,
/// averaged over valid window positions (no padding). Batched inputs average per image.
double ssim(const ImageTensor& a, const ImageTensor& b);

struct ImageMetrics {
    std::string name;
    std::optional<double> psnr;  ///< nullopt = infinite
    double ssim = 0.0;
};

struct MetricReport {
    std::vector<ImageMetrics> images;
    double mean_psnr = 0.0;      ///< over finite-PSNR images only
    int64_t infinite_psnr = 0;   ///< images excluded from mean_psnr
    double mean_ssim = 0.0;
    std::vector<std::string> unmatched;
    nlohmann::json plugin_scores;  ///< null unless a perceptual plugin ran

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    /// `filename,psnr,ssim` with "inf" for infinite PSNR.
    [[nodiscard]] std::string to_csv() const;
};

/// Compares equally named images after removing `border_crop` pixels on every side.
/// Throws CorpusError when the two directories share no file name.
MetricReport evaluate_corpus(const std::filesystem::path& result_dir, const std::filesystem::path& reference_dir,
                             int64_t border_crop);

/// Runs an external perceptual-metric command as `<command> <results> <refs>` and parses its
/// stdout as a JSON object of scores.
nlohmann::json run_metric_plugin(const std::string& command, const std::filesystem::path& result_dir,
                                 const std::filesystem::path& reference_dir);

}  // namespace unpaired_sr
