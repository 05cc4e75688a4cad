#pragma once

#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "unpaired_sr/param_store.hpp"

namespace unpaired_sr {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Missing gradients count as zero.
class Adam {
public:
    Adam() = default;
    Adam(const torch::nn::Module& module, AdamOptions options = {});

    void zero_grad();
    void step(double lr);

    [[nodiscard]] int64_t steps() const { return t_; }

    /// Moments stored as `<prefix>m.<param>` / `<prefix>v.<param>` plus `<prefix>t`.
    [[nodiscard]] ParamStore save(const std::string& prefix) const;
    void load(const ParamStore& store, const std::string& prefix);

private:
    AdamOptions options_;
    std::vector<std::pair<std::string, torch::Tensor>> params_;
    std::vector<torch::Tensor> m_;
    std::vector<torch::Tensor> v_;
    int64_t t_ = 0;
};

}  // namespace unpaired_sr
