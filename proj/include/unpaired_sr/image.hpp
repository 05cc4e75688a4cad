#pragma once

#include <filesystem>
#include <utility>

#include <torch/torch.h>

#include "unpaired_sr/errors.hpp"
#include "unpaired_sr/rng.hpp"

namespace unpaired_sr {

/// Batched RGB image, float32 (batch, 3, height, width), nominal range [0, 1].
class ImageTensor {
public:
    ImageTensor() = default;
    /// Takes ownership of `data`; throws ShapeError unless it is a 4-d 3-channel float tensor.
    explicit ImageTensor(torch::Tensor data);

    static ImageTensor zeros(int64_t batch, int64_t height, int64_t width);
    static ImageTensor filled(int64_t batch, int64_t height, int64_t width, float value);

    [[nodiscard]] const torch::Tensor& tensor() const { return data_; }
    [[nodiscard]] int64_t batch() const { return data_.size(0); }
    [[nodiscard]] int64_t height() const { return data_.size(2); }
    [[nodiscard]] int64_t width() const { return data_.size(3); }
    [[nodiscard]] bool empty() const { return !data_.defined(); }

    /// Single element of the batch, still 4-d.
    [[nodiscard]] ImageTensor item(int64_t index) const;
    [[nodiscard]] ImageTensor clamped() const;

private:
    torch::Tensor data_;
};

/// Integer super-resolution factor, one of 2, 3, 4.
class ScaleFactor {
public:
    explicit ScaleFactor(int s);
    [[nodiscard]] int value() const { return s_; }
    friend bool operator==(ScaleFactor, ScaleFactor) = default;

private:
    int s_;
};

/// Exact resampling ratio num/den.
struct Ratio {
    int num = 1;
    int den = 1;

    static Ratio down(ScaleFactor s) { return {1, s.value()}; }
    static Ratio up(ScaleFactor s) { return {s.value(), 1}; }
    [[nodiscard]] double value() const { return static_cast<double>(num) / den; }
};

ImageTensor load_image(const std::filesystem::path& path);

/// Writes batch-1 images as 8-bit RGB PNG after clamping and round-half-away quantization.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

/// round(v * 255) with halves away from zero, after clamping to [0, 1].
uint8_t quantize_unit(float v);

/// Separable cubic convolution (Keys, a = -0.5). On downscale the kernel is
/// stretched by 1/scale. Output size per axis is round(in * scale).
ImageTensor bicubic_resize(const ImageTensor& img, Ratio scale);

/// Output length for one axis: round-half-up of len * num / den.
int64_t resized_length(int64_t len, Ratio scale);

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

ImageTensor crop(const ImageTensor& img, int64_t y, int64_t x, int64_t height, int64_t width);

ImageTensor random_crop(const ImageTensor& img, int64_t size, Rng& rng);

struct PatchPair {
    ImageTensor hr;
    ImageTensor lr;
};

/// Crops spatially corresponding patches: LR at (y, x), HR at (y*s, x*s).
PatchPair paired_crop(const ImageTensor& hr, const ImageTensor& lr, int64_t lr_size, ScaleFactor scale,
                      Rng& rng);

struct AugmentFlags {
    bool hflip = false;
    bool rot90 = false;
};

/// Draws flip / rotation flags, each with probability 0.5.
AugmentFlags draw_augment(Rng& rng);
ImageTensor apply_augment(const ImageTensor& img, AugmentFlags flags);
ImageTensor augment(const ImageTensor& img, Rng& rng);

/// Concatenates along the batch dimension.
ImageTensor stack_batch(const std::vector<ImageTensor>& items);

}  // namespace unpaired_sr
