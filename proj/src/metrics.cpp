#include "unpaired_sr/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include "unpaired_sr/datasets.hpp"

namespace unpaired_sr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
    if (a.tensor().sizes() != b.tensor().sizes()) throw ShapeError(std::string(what) + ": image shapes differ");
}

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
}

/// Separable valid-mode filtering of a (h, w) plane.
std::vector<double> filter_valid(const std::vector<double>& src, int64_t h, int64_t w,
                                 const std::array<double, kWindow>& g) {
    const int64_t oh = h - kWindow + 1;
    const int64_t ow = w - kWindow + 1;
    std::vector<double> rows(static_cast<size_t>(h * ow));
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[k] * src[static_cast<size_t>(y * w + x + k)];
            rows[static_cast<size_t>(y * ow + x)] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (int64_t y = 0; y < oh; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[k] * rows[static_cast<size_t>((y + k) * ow + x)];
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    }
    return out;
}

double ssim_plane(const std::vector<double>& x, const std::vector<double>& y, int64_t h, int64_t w) {
    static const auto g = gaussian_window();
    std::vector<double> xx(x.size());
    std::vector<double> yy(x.size());
    std::vector<double> xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);
    double total = 0.0;
    for (size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    return total / static_cast<double>(mx.size());
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "mse");
    const auto diff = a.tensor().to(torch::kFloat64) - b.tensor().to(torch::kFloat64);
    return diff.pow(2).mean().item<double>();
}

std::optional<double> psnr(const ImageTensor& a, const ImageTensor& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::nullopt;
    return 10.0 * std::log10(1.0 / m);
}

std::vector<double> luminance(const ImageTensor& img, int64_t index) {
    const auto t = img.tensor()[index].to(torch::kFloat64).contiguous();
    const auto plane = t.size(1) * t.size(2);
    const double* p = t.data_ptr<double>();
    std::vector<double> y(static_cast<size_t>(plane));
    for (int64_t i = 0; i < plane; ++i) y[static_cast<size_t>(i)] = 0.299 * p[i] + 0.587 * p[plane + i] + 0.114 * p[2 * plane + i];
    return y;
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.height() < kWindow || a.width() < kWindow) {
        throw ArgumentError("ssim needs images of at least 11x11");
    }
    double total = 0.0;
    for (int64_t i = 0; i < a.batch(); ++i) total += ssim_plane(luminance(a, i), luminance(b, i), a.height(), a.width());
    return total / static_cast<double>(a.batch());
}

nlohmann::ordered_json MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["images"] = nlohmann::ordered_json::array();
    for (const auto& m : images) {
        nlohmann::ordered_json e;
        e["name"] = m.name;
        if (m.psnr) {
            e["psnr"] = *m.psnr;
        } else {
            e["psnr"] = "inf";
        }
        e["ssim"] = m.ssim;
        j["images"].push_back(e);
    }
    j["mean_psnr"] = mean_psnr;
    j["infinite_psnr_count"] = infinite_psnr;
    j["mean_ssim"] = mean_ssim;
    j["unmatched"] = unmatched;
    if (!plugin_scores.is_null()) j["plugin"] = nlohmann::ordered_json::parse(plugin_scores.dump());
    return j;
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "filename,psnr,ssim\n";
    for (const auto& m : images) {
        out << m.name << ',';
        if (m.psnr) {
            out << *m.psnr;
        } else {
            out << "inf";
        }
        out << ',' << m.ssim << '\n';
    }
    return out.str();
}

MetricReport evaluate_corpus(const std::filesystem::path& result_dir, const std::filesystem::path& reference_dir,
                             int64_t border_crop) {
    if (border_crop < 0) throw ArgumentError("border crop must be non-negative");
    std::map<std::string, std::filesystem::path> results;
    std::map<std::string, std::filesystem::path> references;
    for (const auto& p : list_images(result_dir)) results[p.filename().string()] = p;
    for (const auto& p : list_images(reference_dir)) references[p.filename().string()] = p;

    MetricReport report;
    for (const auto& [name, path] : results) {
        if (references.count(name) == 0) report.unmatched.push_back(name);
    }
    for (const auto& [name, path] : references) {
        if (results.count(name) == 0) report.unmatched.push_back(name);
    }
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (const auto& [name, path] : results) {
        const auto ref_it = references.find(name);
        if (ref_it == references.end()) continue;
        auto a = load_image(path);
        auto b = load_image(ref_it->second);
        if (a.height() != b.height() || a.width() != b.width()) {
            throw ShapeError("result and reference sizes differ for " + name);
        }
        if (a.height() <= 2 * border_crop || a.width() <= 2 * border_crop) {
            throw ArgumentError("border crop leaves nothing of " + name);
        }
        if (border_crop > 0) {
            a = crop(a, border_crop, border_crop, a.height() - 2 * border_crop, a.width() - 2 * border_crop);
            b = crop(b, border_crop, border_crop, b.height() - 2 * border_crop, b.width() - 2 * border_crop);
        }
        ImageMetrics m{name, psnr(a, b), ssim(a, b)};
        if (m.psnr) {
            psnr_sum += *m.psnr;
        } else {
            ++report.infinite_psnr;
        }
        ssim_sum += m.ssim;
        report.images.push_back(m);
    }
    if (report.images.empty()) {
        throw CorpusError("no file names in common between " + result_dir.string() + " and " + reference_dir.string());
    }
    const auto finite = static_cast<int64_t>(report.images.size()) - report.infinite_psnr;
    report.mean_psnr = finite > 0 ? psnr_sum / static_cast<double>(finite) : 0.0;
    report.mean_ssim = ssim_sum / static_cast<double>(report.images.size());
    return report;
}

nlohmann::json run_metric_plugin(const std::string& command, const std::filesystem::path& result_dir,
                                 const std::filesystem::path& reference_dir) {
    const auto line = command + " '" + result_dir.string() + "' '" + reference_dir.string() + "'";
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(line.c_str(), "r"), &pclose);
    if (!pipe) throw IoError("cannot run metric plugin: " + command);
    std::string output;
    std::array<char, 4096> buf{};
    size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) output.append(buf.data(), n);
    const int status = pclose(pipe.release());
    if (status != 0) throw IoError("metric plugin exited with status " + std::to_string(status));
    try {
        auto scores = nlohmann::json::parse(output);
        if (!scores.is_object()) throw IoError("metric plugin output is not a JSON object");
        return scores;
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("metric plugin output is not JSON: ") + e.what());
    }
}

}  // namespace unpaired_sr
