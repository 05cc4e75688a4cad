#include "unpaired_sr/networks.hpp"

#include <cmath>
#include <string>

namespace unpaired_sr {

namespace {

namespace nn = torch::nn;

constexpr double kLeakySlope = 0.2;
constexpr double kNormEps = 1e-5;
constexpr int kDiscKernel = 4;

nn::Conv2d conv3x3(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)); }

nn::Conv2d conv1x1(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 1)); }

int64_t conv_params(int64_t in, int64_t out, int64_t k) { return in * out * k * k + out; }

/// Per-instance, per-channel normalization without affine parameters.
torch::Tensor instance_norm(const torch::Tensor& x) {
    auto mean = x.mean({2, 3}, true);
    auto var = (x - mean).pow(2).mean({2, 3}, true);
    return (x - mean) / torch::sqrt(var + kNormEps);
}

void require_image_input(const torch::Tensor& x, int64_t channels, const std::string& layer) {
    if (x.dim() != 4) throw ShapeError(layer + ": expected a 4-d (batch, channels, h, w) input");
    if (x.size(1) != channels) {
        throw ShapeError(layer + ": expected " + std::to_string(channels) + " input channels, got " +
                         std::to_string(x.size(1)));
    }
}

int log2_exact(int s) {
    int n = 0;
    while ((1 << n) < s) ++n;
    return n;
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int channels) {
    conv1_ = register_module("conv1", conv3x3(channels, channels));
    conv2_ = register_module("conv2", conv3x3(channels, channels));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
    return x + conv2_(torch::relu(conv1_(x)));
}

DegradationGeneratorImpl::DegradationGeneratorImpl(GeneratorSpec spec) : spec_(spec) {
    if (spec.channels < 1 || spec.n_res_blocks < 0) throw SpecError("generator needs channels >= 1");
    head_ = register_module("head", conv3x3(3, spec.channels));
    blocks_ = register_module("blocks", nn::ModuleList());
    for (int i = 0; i < spec.n_res_blocks; ++i) blocks_->push_back(ResidualBlock(spec.channels));
    tail_ = register_module("tail", conv3x3(spec.channels, 3));
}

torch::Tensor DegradationGeneratorImpl::forward(const torch::Tensor& x) {
    require_image_input(x, 3, "generator head");
    auto h = head_(x);
    for (const auto& block : *blocks_) h = block->as<ResidualBlock>()->forward(h);
    return x + tail_(h);
}

ChannelAttentionImpl::ChannelAttentionImpl(int channels, int reduction) {
    const int squeezed = channels / reduction;
    squeeze_ = register_module("squeeze", conv1x1(channels, squeezed));
    excite_ = register_module("excite", conv1x1(squeezed, channels));
}

torch::Tensor ChannelAttentionImpl::gate(const torch::Tensor& x) {
    auto pooled = x.mean({2, 3}, true);
    return torch::sigmoid(excite_(torch::relu(squeeze_(pooled))));
}

AttentionBlockImpl::AttentionBlockImpl(int channels, int reduction) {
    conv1_ = register_module("conv1", conv3x3(channels, channels));
    conv2_ = register_module("conv2", conv3x3(channels, channels));
    attention_ = register_module("attention", ChannelAttention(channels, reduction));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
    return x + attention_(conv2_(torch::relu(conv1_(x))));
}

ResidualGroupImpl::ResidualGroupImpl(int n_blocks, int channels, int reduction) {
    blocks_ = register_module("blocks", nn::Sequential());
    for (int i = 0; i < n_blocks; ++i) blocks_->push_back(AttentionBlock(channels, reduction));
    conv_ = register_module("conv", conv3x3(channels, channels));
}

torch::Tensor ResidualGroupImpl::forward(const torch::Tensor& x) { return x + conv_(blocks_->forward(x)); }

SRNetworkImpl::SRNetworkImpl(SRNetSpec spec) : spec_(spec) {
    if (spec.scale < 2 || spec.scale > 4) throw SpecError("SR scale must be 2, 3 or 4");
    if (spec.channels < 1 || spec.n_groups < 1 || spec.n_blocks_per_group < 1) {
        throw SpecError("SR network needs at least one group, one block and one channel");
    }
    if (spec.ca_reduction < 1 || spec.ca_reduction > spec.channels) {
        throw SpecError("channel-attention reduction " + std::to_string(spec.ca_reduction) +
                        " must lie in [1, channels=" + std::to_string(spec.channels) + "]");
    }
    if (spec.tap.kind == TapKind::after_group && (spec.tap.group < 1 || spec.tap.group > spec.n_groups)) {
        throw SpecError("tap group " + std::to_string(spec.tap.group) + " outside 1.." + std::to_string(spec.n_groups));
    }
    const int c = spec.channels;
    shallow_ = register_module("shallow", conv3x3(3, c));
    groups_ = register_module("groups", nn::ModuleList());
    for (int g = 0; g < spec.n_groups; ++g) groups_->push_back(ResidualGroup(spec.n_blocks_per_group, c, spec.ca_reduction));
    body_tail_ = register_module("body_tail", conv3x3(c, c));
    upsampler_ = register_module("upsampler", nn::Sequential());
    if (spec.scale == 3) {
        upsampler_->push_back(conv3x3(c, 9 * c));
        upsampler_->push_back(nn::PixelShuffle(3));
    } else {
        for (int i = 0; i < log2_exact(spec.scale); ++i) {
            upsampler_->push_back(conv3x3(c, 4 * c));
            upsampler_->push_back(nn::PixelShuffle(2));
        }
    }
    tail_ = register_module("tail", conv3x3(c, 3));
}

SROutput SRNetworkImpl::forward(const torch::Tensor& x) {
    require_image_input(x, 3, "SR shallow conv");
    auto shallow = shallow_(x);
    torch::Tensor tapped;
    if (spec_.tap.kind == TapKind::after_shallow) tapped = shallow;
    auto h = shallow;
    int index = 0;
    for (const auto& group : *groups_) {
        h = group->as<ResidualGroup>()->forward(h);
        ++index;
        if (spec_.tap.kind == TapKind::after_group && index == spec_.tap.group) tapped = h;
    }
    h = body_tail_(h) + shallow;
    return {tail_(upsampler_->forward(h)), tapped};
}

std::vector<int> patch_disc_channels(const PatchDiscSpec& spec) {
    std::vector<int> widths;
    for (int i = 0; i <= spec.n_scale_layers; ++i) widths.push_back(spec.base_channels * std::min(1 << i, 8));
    widths.push_back(1);
    return widths;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(PatchDiscSpec spec) : spec_(spec) {
    if (spec.base_channels < 1 || spec.n_scale_layers < 1 || spec.in_channels < 1) {
        throw SpecError("patch discriminator needs base_channels >= 1, n_scale_layers >= 1");
    }
    const auto widths = patch_disc_channels(spec);
    int in = spec.in_channels;
    for (size_t i = 0; i < widths.size(); ++i) {
        const int stride = static_cast<int>(i) < spec.n_scale_layers ? 2 : 1;
        auto conv = nn::Conv2d(nn::Conv2dOptions(in, widths[i], kDiscKernel).stride(stride).padding(1));
        convs_.push_back(register_module("conv" + std::to_string(i), conv));
        strides_.push_back(stride);
        in = widths[i];
    }
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
    require_image_input(x, spec_.in_channels, "patch discriminator layer 0");
    auto h = x;
    const auto last = convs_.size() - 1;
    for (size_t i = 0; i < convs_.size(); ++i) {
        const auto out_h = (h.size(2) + 2 - kDiscKernel) / strides_[i] + 1;
        const auto out_w = (h.size(3) + 2 - kDiscKernel) / strides_[i] + 1;
        if (h.size(2) + 2 < kDiscKernel || h.size(3) + 2 < kDiscKernel || out_h < 1 || out_w < 1) {
            throw ShapeError("patch discriminator layer " + std::to_string(i) + ": input " +
                             std::to_string(h.size(2)) + "x" + std::to_string(h.size(3)) + " is too small");
        }
        h = convs_[i](h);
        if (i == last) break;
        if (i > 0) h = instance_norm(h);
        h = torch::leaky_relu(h, kLeakySlope);
    }
    return h;
}

void init_fan_in_normal(torch::nn::Module& module, Rng& rng) {
    torch::NoGradGuard no_grad;
    for (auto& sub : module.modules(/*include_self=*/true)) {
        auto* conv = sub->as<nn::Conv2d>();
        if (conv == nullptr) continue;
        auto& w = conv->weight;
        const auto fan_in = w.size(1) * w.size(2) * w.size(3);
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        auto values = torch::empty(w.sizes(), torch::kFloat64);
        auto* data = values.data_ptr<double>();
        for (int64_t i = 0; i < values.numel(); ++i) data[i] = dist(rng);
        w.copy_(values);
        if (conv->bias.defined()) conv->bias.zero_();
    }
}

DegradationGenerator build_generator(const GeneratorSpec& spec, Rng& rng) {
    DegradationGenerator g(spec);
    init_fan_in_normal(*g, rng);
    torch::NoGradGuard no_grad;
    for (auto& item : g->named_parameters()) {
        if (item.key().rfind("tail.", 0) == 0) item.value().zero_();
    }
    return g;
}

SRNetwork build_sr_network(const SRNetSpec& spec, Rng& rng) {
    SRNetwork r(spec);
    init_fan_in_normal(*r, rng);
    return r;
}

PatchDiscriminator build_patch_discriminator(const PatchDiscSpec& spec, Rng& rng) {
    PatchDiscriminator d(spec);
    init_fan_in_normal(*d, rng);
    return d;
}

int64_t parameter_count(const torch::nn::Module& module) {
    int64_t n = 0;
    for (const auto& p : module.parameters()) n += p.numel();
    return n;
}

int64_t expected_parameter_count(const GeneratorSpec& spec) {
    const int64_t c = spec.channels;
    return conv_params(3, c, 3) + spec.n_res_blocks * 2 * conv_params(c, c, 3) + conv_params(c, 3, 3);
}

int64_t expected_parameter_count(const SRNetSpec& spec) {
    const int64_t c = spec.channels;
    const int64_t r = c / spec.ca_reduction;
    const int64_t block = 2 * conv_params(c, c, 3) + conv_params(c, r, 1) + conv_params(r, c, 1);
    const int64_t group = spec.n_blocks_per_group * block + conv_params(c, c, 3);
    const int64_t up = spec.scale == 3 ? conv_params(c, 9 * c, 3) : log2_exact(spec.scale) * conv_params(c, 4 * c, 3);
    return conv_params(3, c, 3) + spec.n_groups * group + conv_params(c, c, 3) + up + conv_params(c, 3, 3);
}

int64_t expected_parameter_count(const PatchDiscSpec& spec) {
    int64_t total = 0;
    int64_t in = spec.in_channels;
    for (int w : patch_disc_channels(spec)) {
        total += conv_params(in, w, kDiscKernel);
        in = w;
    }
    return total;
}

int64_t patch_logit_size(const PatchDiscSpec& spec, int64_t input_size) {
    int64_t n = input_size;
    const int layers = spec.n_scale_layers + 2;
    for (int i = 0; i < layers; ++i) {
        const int stride = i < spec.n_scale_layers ? 2 : 1;
        if (n + 2 < kDiscKernel) return 0;
        n = (n + 2 - kDiscKernel) / stride + 1;
    }
    return n;
}

int64_t patch_receptive_field(const PatchDiscSpec& spec) {
    // Walk back from a single output logit: rf_in = (rf_out - 1) * stride + kernel.
    int64_t rf = 1;
    for (int i = spec.n_scale_layers + 1; i >= 0; --i) {
        const int stride = i < spec.n_scale_layers ? 2 : 1;
        rf = (rf - 1) * stride + kDiscKernel;
    }
    return rf;
}

int64_t patch_min_input(const PatchDiscSpec& spec) {
    int64_t n = 1;
    while (patch_logit_size(spec, n) < 1) ++n;
    return n;
}

}  // namespace unpaired_sr
