#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "unpaired_sr/errors.hpp"

namespace unpaired_sr {

enum class Side { generator, discriminator };

/// Scalar weights of the two training objectives. A zero weight disables its term.
struct LossWeights {
    double w1 = 2.0;  ///< GAN(G, D_real)
    double w2 = 2.0;  ///< GAN(F, D_syn)
    double w3 = 0.5;  ///< cycle
    double lambda1 = 1.0;  ///< l1 content
    double lambda2 = 0.1;  ///< relativistic GAN
    double lambda3 = 1.0;  ///< GAN on R(real LR)
    double lambda4 = 2.0;  ///< adaptive feature loss

    /// Throws ConfigError if any weight is negative or non-finite.
    void validate() const;
};

/// Per-term raw values plus the weighted total, in a fixed term order.
struct LossReport {
    struct Term {
        std::string name;
        double weight = 0.0;
        double value = 0.0;
    };

    int64_t step = 0;
    std::vector<Term> terms;
    double total = 0.0;
    /// Unweighted side quantities (discriminator losses, learning rate).
    std::map<std::string, double> diagnostics;

    [[nodiscard]] std::optional<double> term(const std::string& name) const;
    /// Sum of weight * value in term order.
    [[nodiscard]] double recompute_total() const;
    /// One JSON-lines record: {"step", term -> value, "total", diagnostics...}.
    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] bool operator==(const LossReport& other) const;
};

/// Standard cross-entropy GAN loss on raw logits.
/// Discriminator: mean softplus(-real) + mean softplus(fake). Generator: mean softplus(-fake).
torch::Tensor gan_loss(const torch::Tensor& logits_real, const torch::Tensor& logits_fake, Side side);

/// Mean-absolute error of both reconstruction branches, summed.
torch::Tensor cycle_loss(const torch::Tensor& x_syn, const torch::Tensor& recon_syn, const torch::Tensor& x_real,
                         const torch::Tensor& recon_real);

torch::Tensor l1_content_loss(const torch::Tensor& sr, const torch::Tensor& hr);

/// Relativistic average GAN on raw backbone scores.
/// Generator: -mean log sig(c_f - mean c_r) - mean log(1 - sig(c_r - mean c_f)); discriminator swaps labels.
torch::Tensor ragan_loss(const torch::Tensor& c_real, const torch::Tensor& c_fake, Side side);

/// D_HR loss: real = HR images, fake = R(real LR). Same contract as gan_loss.
torch::Tensor gan_real_hr_loss(const torch::Tensor& logits_real_hr, const torch::Tensor& logits_sr_of_real_lr,
                               Side side);

/// Feature-domain adversary. Discriminator treats generated-LR features as the positive class;
/// the extractor side swaps labels so real-LR features are pushed toward the generated side.
torch::Tensor adaptive_feature_loss(const torch::Tensor& logits_gen, const torch::Tensor& logits_real, Side side);

struct Stage1Components {
    std::optional<torch::Tensor> gan_g;
    std::optional<torch::Tensor> gan_f;
    std::optional<torch::Tensor> cycle;
};

struct Stage2Components {
    std::optional<torch::Tensor> l1;
    std::optional<torch::Tensor> ragan;
    std::optional<torch::Tensor> gan_real;
    std::optional<torch::Tensor> ada;
};

struct Objective {
    torch::Tensor total;  ///< differentiable weighted sum
    LossReport report;
};

/// w1 * gan_g + w2 * gan_f + w3 * cycle. Absent terms are allowed only at weight zero and are omitted.
Objective stage1_objective(const Stage1Components& components, const LossWeights& weights);

/// lambda1 * l1 + lambda2 * ragan + lambda3 * gan_real + lambda4 * ada, same absence rule.
Objective stage2_objective(const Stage2Components& components, const LossWeights& weights);

}  // namespace unpaired_sr
