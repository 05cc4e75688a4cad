#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "unpaired_sr/image.hpp"

// Independent reference computations used by unit and acceptance tests.
namespace unpaired_sr::oracle {

inline double keys(double x) {
    const double a = -0.5;
    x = std::fabs(x);
    if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    return 0.0;
}

/// Dense (out_len x in_len) resampling matrix: widened Keys kernel, normalized rows,
/// half-sample symmetric boundary folding.
inline std::vector<std::vector<double>> resample_matrix(int64_t in_len, int64_t out_len, double scale) {
    std::vector<std::vector<double>> m(static_cast<size_t>(out_len), std::vector<double>(static_cast<size_t>(in_len), 0.0));
    const double k = std::min(scale, 1.0);
    for (int64_t o = 0; o < out_len; ++o) {
        const double c = (o + 0.5) / scale - 0.5;
        std::vector<std::pair<int64_t, double>> raw;
        double sum = 0.0;
        for (int64_t j = static_cast<int64_t>(std::floor(c - 2.0 / k)) - 1; j <= static_cast<int64_t>(std::ceil(c + 2.0 / k)) + 1; ++j) {
            const double w = k * keys(k * (c - j));
            if (w == 0.0) continue;
            raw.emplace_back(j, w);
            sum += w;
        }
        for (auto [j, w] : raw) {
            int64_t i = j;
            while (i < 0 || i >= in_len) i = i < 0 ? -i - 1 : 2 * in_len - 1 - i;
            m[static_cast<size_t>(o)][static_cast<size_t>(i)] += w / sum;
        }
    }
    return m;
}

/// out = clamp(Mh * X * Mw^T) per channel, double precision throughout.
inline torch::Tensor dense_resize(const torch::Tensor& img, int64_t out_h, int64_t out_w, double scale) {
    const auto in_h = img.size(2);
    const auto in_w = img.size(3);
    const auto mh = resample_matrix(in_h, out_h, scale);
    const auto mw = resample_matrix(in_w, out_w, scale);
    auto to_tensor = [](const std::vector<std::vector<double>>& m) {
        auto t = torch::empty({static_cast<int64_t>(m.size()), static_cast<int64_t>(m[0].size())}, torch::kFloat64);
        for (size_t r = 0; r < m.size(); ++r) {
            for (size_t c = 0; c < m[0].size(); ++c) t[r][c] = m[r][c];
        }
        return t;
    };
    const auto Mh = to_tensor(mh);
    const auto Mw = to_tensor(mw);
    auto x = img.to(torch::kFloat64);
    auto out = torch::matmul(torch::matmul(Mh, x), Mw.t());
    return out.clamp(0.0, 1.0);
}

/// Brute-force double-loop mean squared error.
inline double mse(const torch::Tensor& a, const torch::Tensor& b) {
    auto x = a.to(torch::kFloat64).contiguous();
    auto y = b.to(torch::kFloat64).contiguous();
    const double* p = x.data_ptr<double>();
    const double* q = y.data_ptr<double>();
    double acc = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) acc += (p[i] - q[i]) * (p[i] - q[i]);
    return acc / static_cast<double>(x.numel());
}

/// Sliding-window SSIM on Rec.601 luma, explicit 11x11 Gaussian window per position.
inline double ssim(const torch::Tensor& a, const torch::Tensor& b) {
    auto luma = [](const torch::Tensor& t) {
        auto x = t.to(torch::kFloat64);
        return (0.299 * x[0][0] + 0.587 * x[0][1] + 0.114 * x[0][2]).contiguous();
    };
    const auto x = luma(a);
    const auto y = luma(b);
    const int64_t h = x.size(0);
    const int64_t w = x.size(1);
    double win[11][11];
    double total = 0.0;
    for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
            win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
            total += win[i][j];
        }
    }
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    const double* px = x.data_ptr<double>();
    const double* py = y.data_ptr<double>();
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t r = 0; r + 11 <= h; ++r) {
        for (int64_t c = 0; c + 11 <= w; ++c) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    const double g = win[i][j] / total;
                    const double vx = px[(r + i) * w + c + j];
                    const double vy = py[(r + i) * w + c + j];
                    mx += g * vx;
                    my += g * vy;
                    sxx += g * vx * vx;
                    syy += g * vy * vy;
                    sxy += g * vx * vy;
                }
            }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cov = sxy - mx * my;
            sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

/// Closed-form SSIM of two constant images (all variances zero).
inline double ssim_constant(double a, double b) {
    const double c1 = 0.01 * 0.01;
    return (2 * a * b + c1) / (a * a + b * b + c1);
}

/// Output length of one conv layer.
inline int64_t conv_out(int64_t in, int64_t k, int64_t s, int64_t p) { return (in + 2 * p - k) / s + 1; }

/// Receptive field by backward recursion r <- (r - 1) * stride + kernel.
inline int64_t receptive_field(const std::vector<std::pair<int64_t, int64_t>>& kernel_stride) {
    int64_t r = 1;
    for (auto it = kernel_stride.rbegin(); it != kernel_stride.rend(); ++it) r = (r - 1) * it->second + it->first;
    return r;
}

/// Central finite-difference gradient of scalar `f` with respect to every element of `x`
/// (float64, modified in place and restored). Returned flattened.
inline torch::Tensor numeric_gradient(torch::Tensor x, const std::function<double()>& f, double h = 1e-6) {
    torch::NoGradGuard no_grad;
    double* data = x.data_ptr<double>();
    auto numeric = torch::zeros({x.numel()}, torch::kFloat64);
    double* num = numeric.data_ptr<double>();
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double orig = data[i];
        data[i] = orig + h;
        const double up = f();
        data[i] = orig - h;
        const double down = f();
        data[i] = orig;
        num[i] = (up - down) / (2 * h);
    }
    return numeric;
}

/// Relative error ||analytic - numeric|| / max(||numeric||, tiny).
inline double finite_difference_error(torch::Tensor x, const torch::Tensor& analytic,
                                      const std::function<double()>& f, double h = 1e-6) {
    const auto numeric = numeric_gradient(std::move(x), f, h);
    const double denom = std::max(numeric.norm().item<double>(), 1e-12);
    return (analytic.reshape({-1}) - numeric).norm().item<double>() / denom;
}

}  // namespace unpaired_sr::oracle
