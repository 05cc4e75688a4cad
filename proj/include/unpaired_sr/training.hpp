#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "unpaired_sr/losses.hpp"
#include "unpaired_sr/networks.hpp"
#include "unpaired_sr/param_store.hpp"

namespace unpaired_sr {

/// A checkpoint is the complete training state: step, seed, parameters and moments.
using TrainState = Checkpoint;

/// lr0 * 0.5^floor(step / halve_every).
double lr_at(int64_t step, double lr0, int64_t halve_every);

/// Called after every step with the step's report.
using StepCallback = std::function<void(const LossReport&)>;

/// Streams reports as JSON lines every `every` steps (and on the final step).
class ReportLog {
public:
    ReportLog() = default;
    ReportLog(std::ostream* out, int64_t every, int64_t final_step) : out_(out), every_(every), final_(final_step) {}
    void write(const LossReport& report) const;

private:
    std::ostream* out_ = nullptr;
    int64_t every_ = 1;
    int64_t final_ = -1;
};

/// Turns parameter gradients off for the lifetime of the guard.
class FrozenParams {
public:
    explicit FrozenParams(std::vector<torch::Tensor> params);
    ~FrozenParams();
    FrozenParams(const FrozenParams&) = delete;
    FrozenParams& operator=(const FrozenParams&) = delete;

private:
    std::vector<torch::Tensor> params_;
};

/// Replay buffer of previously generated images for discriminator updates.
class ImagePool {
public:
    explicit ImagePool(int64_t capacity = 0) : capacity_(capacity) {}
    /// Returns a batch mixing the new images with stored ones; disabled pools pass through.
    torch::Tensor query(const torch::Tensor& images, Rng& rng);
    [[nodiscard]] ParamStore save(const std::string& prefix) const;
    void load(const ParamStore& store, const std::string& prefix);

private:
    int64_t capacity_;
    std::vector<torch::Tensor> images_;
};

nlohmann::json to_json(const GeneratorSpec& spec);
nlohmann::json to_json(const SRNetSpec& spec);
nlohmann::json to_json(const PatchDiscSpec& spec);
nlohmann::json to_json(const LossWeights& weights);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
SRNetSpec sr_spec_from_json(const nlohmann::json& j);
PatchDiscSpec disc_spec_from_json(const nlohmann::json& j);

std::string to_string(TapPoint tap);
TapPoint parse_tap_point(const std::string& text);

/// Throws NumericError if `value` is NaN or infinite.
void require_finite(const torch::Tensor& value, const std::string& what);

}  // namespace unpaired_sr
