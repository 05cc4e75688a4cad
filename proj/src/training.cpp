#include "unpaired_sr/training.hpp"

#include <cmath>

namespace unpaired_sr {

double lr_at(int64_t step, double lr0, int64_t halve_every) {
    if (step < 0) throw ArgumentError("step must be non-negative");
    if (halve_every <= 0) throw ArgumentError("halve_every must be positive");
    return lr0 * std::pow(0.5, static_cast<double>(step / halve_every));
}

void ReportLog::write(const LossReport& report) const {
    if (out_ == nullptr) return;
    if (report.step % every_ == 0 || report.step == final_) {
        *out_ << report.to_json().dump() << '\n';
        out_->flush();
    }
}

FrozenParams::FrozenParams(std::vector<torch::Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.requires_grad_(false);
}

FrozenParams::~FrozenParams() {
    for (auto& p : params_) p.requires_grad_(true);
}

torch::Tensor ImagePool::query(const torch::Tensor& images, Rng& rng) {
    if (capacity_ <= 0) return images;
    std::vector<torch::Tensor> out;
    std::bernoulli_distribution coin(0.5);
    for (int64_t i = 0; i < images.size(0); ++i) {
        auto image = images.narrow(0, i, 1).detach().clone();
        if (static_cast<int64_t>(images_.size()) < capacity_) {
            images_.push_back(image);
            out.push_back(image);
        } else if (coin(rng)) {
            std::uniform_int_distribution<size_t> pick(0, images_.size() - 1);
            const auto k = pick(rng);
            out.push_back(images_[k]);
            images_[k] = image;
        } else {
            out.push_back(image);
        }
    }
    return torch::cat(out, 0);
}

ParamStore ImagePool::save(const std::string& prefix) const {
    ParamStore store;
    for (size_t i = 0; i < images_.size(); ++i) store.add(prefix + std::to_string(i), images_[i]);
    return store;
}

void ImagePool::load(const ParamStore& store, const std::string& prefix) {
    images_.clear();
    for (size_t i = 0;; ++i) {
        const auto name = prefix + std::to_string(i);
        if (!store.contains(name)) break;
        images_.push_back(store.at(name).clone());
    }
}

nlohmann::json to_json(const GeneratorSpec& s) {
    return {{"n_res_blocks", s.n_res_blocks}, {"channels", s.channels}};
}

nlohmann::json to_json(const SRNetSpec& s) {
    return {{"n_groups", s.n_groups},         {"n_blocks_per_group", s.n_blocks_per_group},
            {"channels", s.channels},         {"ca_reduction", s.ca_reduction},
            {"scale", s.scale},               {"tap", to_string(s.tap)}};
}

nlohmann::json to_json(const PatchDiscSpec& s) {
    return {{"base_channels", s.base_channels}, {"n_scale_layers", s.n_scale_layers}, {"in_channels", s.in_channels}};
}

nlohmann::json to_json(const LossWeights& w) {
    return {{"w1", w.w1},           {"w2", w.w2},           {"w3", w.w3},          {"lambda1", w.lambda1},
            {"lambda2", w.lambda2}, {"lambda3", w.lambda3}, {"lambda4", w.lambda4}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
    return {j.at("n_res_blocks").get<int>(), j.at("channels").get<int>()};
}

SRNetSpec sr_spec_from_json(const nlohmann::json& j) {
    SRNetSpec s;
    s.n_groups = j.at("n_groups").get<int>();
    s.n_blocks_per_group = j.at("n_blocks_per_group").get<int>();
    s.channels = j.at("channels").get<int>();
    s.ca_reduction = j.at("ca_reduction").get<int>();
    s.scale = j.at("scale").get<int>();
    s.tap = parse_tap_point(j.at("tap").get<std::string>());
    return s;
}

PatchDiscSpec disc_spec_from_json(const nlohmann::json& j) {
    return {j.at("base_channels").get<int>(), j.at("n_scale_layers").get<int>(), j.at("in_channels").get<int>()};
}

std::string to_string(TapPoint tap) {
    if (tap.kind == TapKind::after_shallow) return "after_shallow";
    return "after_group_" + std::to_string(tap.group);
}

TapPoint parse_tap_point(const std::string& text) {
    if (text == "after_shallow") return {TapKind::after_shallow, 0};
    const std::string prefix = "after_group_";
    if (text.rfind(prefix, 0) == 0) {
        try {
            size_t used = 0;
            const int k = std::stoi(text.substr(prefix.size()), &used);
            if (used == text.size() - prefix.size() && k >= 1) return {TapKind::after_group, k};
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("tap point must be 'after_shallow' or 'after_group_<k>', got '" + text + "'");
}

void require_finite(const torch::Tensor& value, const std::string& what) {
    if (!torch::isfinite(value).all().item<bool>()) throw NumericError(what + " is not finite");
}

}  // namespace unpaired_sr
