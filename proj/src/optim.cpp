#include "unpaired_sr/optim.hpp"

#include <cmath>

namespace unpaired_sr {

Adam::Adam(const torch::nn::Module& module, AdamOptions options) : options_(options) {
    for (const auto& item : module.named_parameters()) {
        params_.emplace_back(item.key(), item.value());
        m_.push_back(torch::zeros_like(item.value()));
        v_.push_back(torch::zeros_like(item.value()));
    }
}

void Adam::zero_grad() {
    for (auto& [name, p] : params_) {
        if (p.grad().defined()) p.mutable_grad() = torch::Tensor();
    }
}

void Adam::step(double lr) {
    torch::NoGradGuard no_grad;
    ++t_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i].second;
        auto grad = p.grad().defined() ? p.grad() : torch::zeros_like(p);
        m_[i].mul_(options_.beta1).add_(grad, 1.0 - options_.beta1);
        v_[i].mul_(options_.beta2).addcmul_(grad, grad, 1.0 - options_.beta2);
        auto denom = (v_[i].sqrt() / std::sqrt(bc2)).add_(options_.eps);
        p.addcdiv_(m_[i], denom, -lr / bc1);
    }
}

ParamStore Adam::save(const std::string& prefix) const {
    ParamStore store;
    for (size_t i = 0; i < params_.size(); ++i) {
        store.add(prefix + "m." + params_[i].first, m_[i]);
        store.add(prefix + "v." + params_[i].first, v_[i]);
    }
    store.add(prefix + "t", torch::tensor(t_, torch::kInt64));
    return store;
}

void Adam::load(const ParamStore& store, const std::string& prefix) {
    torch::NoGradGuard no_grad;
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].copy_(store.at(prefix + "m." + params_[i].first));
        v_[i].copy_(store.at(prefix + "v." + params_[i].first));
    }
    t_ = store.at(prefix + "t").item<int64_t>();
}

}  // namespace unpaired_sr
