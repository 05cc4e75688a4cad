#include "unpaired_sr/losses.hpp"

#include <cmath>
#include <utility>

namespace unpaired_sr {

namespace {

void require_finite_logits(const torch::Tensor& t, const char* what) {
    if (t.defined() && torch::isnan(t).any().item<bool>()) {
        throw NumericError(std::string(what) + " contains NaN");
    }
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    if (a.sizes() != b.sizes()) throw ShapeError(std::string(what) + ": shape mismatch");
}

/// -log sigmoid(x) in fused form.
torch::Tensor neg_log_sigmoid(const torch::Tensor& x) { return torch::nn::functional::softplus(-x); }

/// -log(1 - sigmoid(x)).
torch::Tensor neg_log_one_minus_sigmoid(const torch::Tensor& x) { return torch::nn::functional::softplus(x); }

/// Binary cross-entropy with `positive` labelled 1 and `negative` labelled 0.
torch::Tensor two_class_loss(const torch::Tensor& positive, const torch::Tensor& negative) {
    return neg_log_sigmoid(positive).mean() + neg_log_one_minus_sigmoid(negative).mean();
}

using Entry = std::pair<const char*, double>;

Objective compose(const std::vector<std::pair<Entry, const std::optional<torch::Tensor>*>>& parts) {
    Objective out;
    for (const auto& [entry, tensor] : parts) {
        const auto& [name, weight] = entry;
        if (!tensor->has_value()) {
            if (weight != 0.0) throw CompositionError(std::string("missing loss component '") + name + "'");
            continue;
        }
        const auto& value = **tensor;
        out.total = out.total.defined() ? out.total + weight * value : weight * value;
        out.report.terms.push_back({name, weight, value.item<double>()});
    }
    if (!out.total.defined()) throw CompositionError("objective has no components");
    out.report.total = out.report.recompute_total();
    return out;
}

}  // namespace

void LossWeights::validate() const {
    const std::pair<const char*, double> all[] = {{"w1", w1},           {"w2", w2},           {"w3", w3},
                                                  {"lambda1", lambda1}, {"lambda2", lambda2}, {"lambda3", lambda3},
                                                  {"lambda4", lambda4}};
    for (const auto& [name, v] : all) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string("weights.") + name + " must be >= 0");
    }
}

std::optional<double> LossReport::term(const std::string& name) const {
    for (const auto& t : terms) {
        if (t.name == name) return t.value;
    }
    return std::nullopt;
}

double LossReport::recompute_total() const {
    double total = 0.0;
    for (const auto& t : terms) total += t.weight * t.value;
    return total;
}

nlohmann::ordered_json LossReport::to_json() const {
    nlohmann::ordered_json j;
    j["step"] = step;
    for (const auto& t : terms) j[t.name] = t.value;
    j["total"] = total;
    for (const auto& [k, v] : diagnostics) j[k] = v;
    return j;
}

bool LossReport::operator==(const LossReport& other) const {
    if (step != other.step || total != other.total || terms.size() != other.terms.size() ||
        diagnostics != other.diagnostics) {
        return false;
    }
    for (size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].name != other.terms[i].name || terms[i].weight != other.terms[i].weight ||
            terms[i].value != other.terms[i].value) {
            return false;
        }
    }
    return true;
}

torch::Tensor gan_loss(const torch::Tensor& logits_real, const torch::Tensor& logits_fake, Side side) {
    require_finite_logits(logits_fake, "fake logits");
    if (side == Side::generator) return neg_log_sigmoid(logits_fake).mean();
    require_finite_logits(logits_real, "real logits");
    return two_class_loss(logits_real, logits_fake);
}

torch::Tensor cycle_loss(const torch::Tensor& x_syn, const torch::Tensor& recon_syn, const torch::Tensor& x_real,
                         const torch::Tensor& recon_real) {
    require_same_shape(x_syn, recon_syn, "cycle loss (synthetic branch)");
    require_same_shape(x_real, recon_real, "cycle loss (real branch)");
    return (recon_syn - x_syn).abs().mean() + (recon_real - x_real).abs().mean();
}

torch::Tensor l1_content_loss(const torch::Tensor& sr, const torch::Tensor& hr) {
    require_same_shape(sr, hr, "l1 content loss");
    return (sr - hr).abs().mean();
}

torch::Tensor ragan_loss(const torch::Tensor& c_real, const torch::Tensor& c_fake, Side side) {
    require_finite_logits(c_real, "RaGAN real scores");
    require_finite_logits(c_fake, "RaGAN fake scores");
    const auto rel_real = c_real - c_fake.mean();
    const auto rel_fake = c_fake - c_real.mean();
    if (side == Side::generator) return two_class_loss(rel_fake, rel_real);
    return two_class_loss(rel_real, rel_fake);
}

torch::Tensor gan_real_hr_loss(const torch::Tensor& logits_real_hr, const torch::Tensor& logits_sr_of_real_lr,
                               Side side) {
    return gan_loss(logits_real_hr, logits_sr_of_real_lr, side);
}

torch::Tensor adaptive_feature_loss(const torch::Tensor& logits_gen, const torch::Tensor& logits_real, Side side) {
    require_finite_logits(logits_gen, "adaptive gen logits");
    require_finite_logits(logits_real, "adaptive real logits");
    if (side == Side::discriminator) return two_class_loss(logits_gen, logits_real);
    return two_class_loss(logits_real, logits_gen);
}

Objective stage1_objective(const Stage1Components& c, const LossWeights& w) {
    return compose({{{"gan_G", w.w1}, &c.gan_g}, {{"gan_F", w.w2}, &c.gan_f}, {{"cycle", w.w3}, &c.cycle}});
}

Objective stage2_objective(const Stage2Components& c, const LossWeights& w) {
    return compose({{{"l1", w.lambda1}, &c.l1},
                    {{"ragan", w.lambda2}, &c.ragan},
                    {{"gan_real", w.lambda3}, &c.gan_real},
                    {{"ada", w.lambda4}, &c.ada}});
}

}  // namespace unpaired_sr
