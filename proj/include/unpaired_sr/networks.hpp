#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "unpaired_sr/errors.hpp"
#include "unpaired_sr/rng.hpp"

namespace unpaired_sr {

/// Resolution-preserving degradation generator (G and F share this shape).
struct GeneratorSpec {
    int n_res_blocks = 8;
    int channels = 64;
};

enum class TapKind { after_shallow, after_group };

/// Where the adaptive-loss feature map is read from the SR trunk.
struct TapPoint {
    TapKind kind = TapKind::after_group;
    int group = 1;  ///< 1-based group index for after_group
};

/// Channel-attention residual-in-residual SR network.
struct SRNetSpec {
    int n_groups = 5;
    int n_blocks_per_group = 10;
    int channels = 64;
    int ca_reduction = 16;
    int scale = 4;
    TapPoint tap{};
};

/// PatchGAN-style discriminator: `n_scale_layers` stride-2 convs, one stride-1
/// feature conv and a stride-1 one-channel output conv, all 4x4 with padding 1.
struct PatchDiscSpec {
    int base_channels = 64;
    int n_scale_layers = 3;
    int in_channels = 3;
};

class ResidualBlockImpl : public torch::nn::Module {
public:
    explicit ResidualBlockImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1_{nullptr};
    torch::nn::Conv2d conv2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

class DegradationGeneratorImpl : public torch::nn::Module {
public:
    explicit DegradationGeneratorImpl(GeneratorSpec spec);
    /// x + tail(blocks(head(x))).
    torch::Tensor forward(const torch::Tensor& x);
    [[nodiscard]] const GeneratorSpec& spec() const { return spec_; }

private:
    GeneratorSpec spec_;
    torch::nn::Conv2d head_{nullptr};
    torch::nn::ModuleList blocks_{nullptr};
    torch::nn::Conv2d tail_{nullptr};
};
TORCH_MODULE(DegradationGenerator);

/// Global-pool squeeze, two 1x1 convs, sigmoid gate.
class ChannelAttentionImpl : public torch::nn::Module {
public:
    ChannelAttentionImpl(int channels, int reduction);
    torch::Tensor gate(const torch::Tensor& x);
    torch::Tensor forward(const torch::Tensor& x) { return x * gate(x); }

private:
    torch::nn::Conv2d squeeze_{nullptr};
    torch::nn::Conv2d excite_{nullptr};
};
TORCH_MODULE(ChannelAttention);

class AttentionBlockImpl : public torch::nn::Module {
public:
    AttentionBlockImpl(int channels, int reduction);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1_{nullptr};
    torch::nn::Conv2d conv2_{nullptr};
    ChannelAttention attention_{nullptr};
};
TORCH_MODULE(AttentionBlock);

class ResidualGroupImpl : public torch::nn::Module {
public:
    ResidualGroupImpl(int n_blocks, int channels, int reduction);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Sequential blocks_{nullptr};
    torch::nn::Conv2d conv_{nullptr};
};
TORCH_MODULE(ResidualGroup);

struct SROutput {
    torch::Tensor sr;
    torch::Tensor features;  ///< activation at the configured tap point
};

class SRNetworkImpl : public torch::nn::Module {
public:
    explicit SRNetworkImpl(SRNetSpec spec);
    SROutput forward(const torch::Tensor& x);
    [[nodiscard]] const SRNetSpec& spec() const { return spec_; }

private:
    SRNetSpec spec_;
    torch::nn::Conv2d shallow_{nullptr};
    torch::nn::ModuleList groups_{nullptr};
    torch::nn::Conv2d body_tail_{nullptr};
    torch::nn::Sequential upsampler_{nullptr};
    torch::nn::Conv2d tail_{nullptr};
};
TORCH_MODULE(SRNetwork);

class PatchDiscriminatorImpl : public torch::nn::Module {
public:
    explicit PatchDiscriminatorImpl(PatchDiscSpec spec);
    /// Raw logit map (batch, 1, h', w').
    torch::Tensor forward(const torch::Tensor& x);
    [[nodiscard]] const PatchDiscSpec& spec() const { return spec_; }

private:
    PatchDiscSpec spec_;
    std::vector<torch::nn::Conv2d> convs_;
    std::vector<int> strides_;
};
TORCH_MODULE(PatchDiscriminator);

/// Fresh generator: fan-in normal weights, zero biases, zero tail, hence the identity map.
DegradationGenerator build_generator(const GeneratorSpec& spec, Rng& rng);
SRNetwork build_sr_network(const SRNetSpec& spec, Rng& rng);
PatchDiscriminator build_patch_discriminator(const PatchDiscSpec& spec, Rng& rng);

/// Fills every weight with N(0, 1/fan_in) and every bias with zero.
void init_fan_in_normal(torch::nn::Module& module, Rng& rng);

int64_t parameter_count(const torch::nn::Module& module);

/// Closed-form parameter counts from the spec alone.
int64_t expected_parameter_count(const GeneratorSpec& spec);
int64_t expected_parameter_count(const SRNetSpec& spec);
int64_t expected_parameter_count(const PatchDiscSpec& spec);

/// Logit-map side length for a square input, or <= 0 when the input is too small.
int64_t patch_logit_size(const PatchDiscSpec& spec, int64_t input_size);
/// Input-pixel extent seen by one output logit.
int64_t patch_receptive_field(const PatchDiscSpec& spec);
/// Smallest square input that still yields a 1x1 logit map.
int64_t patch_min_input(const PatchDiscSpec& spec);

/// Generator widths per discriminator conv, output layer included.
std::vector<int> patch_disc_channels(const PatchDiscSpec& spec);

}  // namespace unpaired_sr
