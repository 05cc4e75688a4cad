#include "unpaired_sr/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace unpaired_sr {

namespace {

constexpr double kKeysA = -0.5;

std::string lower_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

ImageTensor from_rgb8(const std::vector<uint8_t>& pixels, int64_t height, int64_t width) {
    auto hwc = torch::from_blob(const_cast<uint8_t*>(pixels.data()), {height, width, 3}, torch::kUInt8);
    auto chw = hwc.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0f).unsqueeze(0).contiguous();
    return ImageTensor(chw);
}

ImageTensor load_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw UnsupportedFormatError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const auto format = image.format;
    if ((format & PNG_FORMAT_FLAG_COLOR) == 0 || (format & PNG_FORMAT_FLAG_ALPHA) != 0 ||
        (format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw UnsupportedFormatError("PNG " + path.string() + " is not 8-bit RGB");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw UnsupportedFormatError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    return from_rgb8(buffer, image.height, image.width);
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf escape;
    char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->escape, 1);
}

ImageTensor load_jpeg(const std::filesystem::path& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) throw IoError("cannot open " + path.string());

    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = on_jpeg_error;
    std::vector<uint8_t> pixels;
    if (setjmp(err.escape)) {
        jpeg_destroy_decompress(&cinfo);
        throw UnsupportedFormatError("cannot decode JPEG " + path.string() + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.num_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw UnsupportedFormatError("JPEG " + path.string() + " is not 3-component color");
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const auto width = static_cast<int64_t>(cinfo.output_width);
    const auto height = static_cast<int64_t>(cinfo.output_height);
    pixels.resize(static_cast<size_t>(width * height * 3));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(pixels, height, width);
}

/// Index into [0, n) under symmetric (edge-repeating) reflection.
int64_t mirror_index(int64_t j, int64_t n) {
    const int64_t period = 2 * n;
    j %= period;
    if (j < 0) j += period;
    return j < n ? j : period - 1 - j;
}

struct Taps {
    int64_t first = 0;
    std::vector<double> weights;
};

std::vector<Taps> resample_taps(int64_t in_len, int64_t out_len, Ratio scale) {
    const double s = scale.value();
    const double stretch = s < 1.0 ? s : 1.0;
    const double radius = 2.0 / stretch;
    std::vector<Taps> taps(static_cast<size_t>(out_len));
    for (int64_t o = 0; o < out_len; ++o) {
        const double center = (static_cast<double>(o) + 0.5) / s - 0.5;
        auto& t = taps[static_cast<size_t>(o)];
        t.first = static_cast<int64_t>(std::floor(center - radius));
        const auto last = static_cast<int64_t>(std::ceil(center + radius));
        double sum = 0.0;
        for (int64_t j = t.first; j <= last; ++j) {
            const double w = stretch * cubic_kernel(stretch * (center - static_cast<double>(j)));
            t.weights.push_back(w);
            sum += w;
        }
        for (auto& w : t.weights) w /= sum;
    }
    return taps;
}

}  // namespace

ImageTensor::ImageTensor(torch::Tensor data) : data_(std::move(data)) {
    if (data_.dim() != 4 || data_.size(1) != 3) {
        throw ShapeError("image tensor must be (batch, 3, height, width)");
    }
    if (data_.size(2) < 1 || data_.size(3) < 1) throw ShapeError("image must be at least 1x1");
    if (data_.scalar_type() != torch::kFloat32) data_ = data_.to(torch::kFloat32);
}

ImageTensor ImageTensor::zeros(int64_t batch, int64_t height, int64_t width) {
    return ImageTensor(torch::zeros({batch, 3, height, width}));
}

ImageTensor ImageTensor::filled(int64_t batch, int64_t height, int64_t width, float value) {
    return ImageTensor(torch::full({batch, 3, height, width}, value));
}

ImageTensor ImageTensor::item(int64_t index) const {
    return ImageTensor(data_.narrow(0, index, 1));
}

ImageTensor ImageTensor::clamped() const { return ImageTensor(data_.clamp(0.0, 1.0)); }

ScaleFactor::ScaleFactor(int s) : s_(s) {
    if (s < 2 || s > 4) throw ArgumentError("scale factor must be 2, 3 or 4, got " + std::to_string(s));
}

ImageTensor load_image(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("no such image file: " + path.string());
    const auto ext = lower_extension(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
    throw UnsupportedFormatError("unsupported image extension: " + path.string());
}

uint8_t quantize_unit(float v) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<uint8_t>(std::round(clamped * 255.0));
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    if (img.batch() != 1) throw ArgumentError("save_image expects a batch of 1");
    const auto height = img.height();
    const auto width = img.width();
    auto hwc = img.tensor()[0].permute({1, 2, 0}).contiguous().to(torch::kFloat32);
    const float* src = hwc.data_ptr<float>();
    std::vector<uint8_t> bytes(static_cast<size_t>(height * width * 3));
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_unit(src[i]);

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw IoError("cannot write " + path.string() + ": " + image.message);
    }
}

double cubic_kernel(double x) {
    const double ax = std::abs(x);
    if (ax <= 1.0) return ((kKeysA + 2.0) * ax - (kKeysA + 3.0)) * ax * ax + 1.0;
    if (ax < 2.0) return ((kKeysA * ax - 5.0 * kKeysA) * ax + 8.0 * kKeysA) * ax - 4.0 * kKeysA;
    return 0.0;
}

int64_t resized_length(int64_t len, Ratio scale) {
    return (2 * len * scale.num + scale.den) / (2 * static_cast<int64_t>(scale.den));
}

ImageTensor bicubic_resize(const ImageTensor& img, Ratio scale) {
    if (scale.num <= 0 || scale.den <= 0) throw ArgumentError("resize scale must be positive");
    const int64_t in_h = img.height();
    const int64_t in_w = img.width();
    const int64_t out_h = resized_length(in_h, scale);
    const int64_t out_w = resized_length(in_w, scale);
    if (out_h < 1 || out_w < 1) throw ArgumentError("resize would produce an empty image");

    const auto taps_h = resample_taps(in_h, out_h, scale);
    const auto taps_w = resample_taps(in_w, out_w, scale);
    auto src = img.tensor().contiguous();
    const int64_t planes = src.size(0) * src.size(1);
    auto out = torch::empty({src.size(0), 3, out_h, out_w}, torch::kFloat32);
    const float* in_ptr = src.data_ptr<float>();
    float* out_ptr = out.data_ptr<float>();

    std::vector<double> rows(static_cast<size_t>(in_h * out_w));
    for (int64_t p = 0; p < planes; ++p) {
        const float* plane = in_ptr + p * in_h * in_w;
        for (int64_t y = 0; y < in_h; ++y) {
            for (int64_t x = 0; x < out_w; ++x) {
                const auto& t = taps_w[static_cast<size_t>(x)];
                double acc = 0.0;
                for (size_t k = 0; k < t.weights.size(); ++k) {
                    acc += t.weights[k] * plane[y * in_w + mirror_index(t.first + static_cast<int64_t>(k), in_w)];
                }
                rows[static_cast<size_t>(y * out_w + x)] = acc;
            }
        }
        float* dst = out_ptr + p * out_h * out_w;
        for (int64_t y = 0; y < out_h; ++y) {
            const auto& t = taps_h[static_cast<size_t>(y)];
            for (int64_t x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (size_t k = 0; k < t.weights.size(); ++k) {
                    const int64_t sy = mirror_index(t.first + static_cast<int64_t>(k), in_h);
                    acc += t.weights[k] * rows[static_cast<size_t>(sy * out_w + x)];
                }
                dst[y * out_w + x] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    }
    return ImageTensor(out);
}

ImageTensor crop(const ImageTensor& img, int64_t y, int64_t x, int64_t height, int64_t width) {
    if (y < 0 || x < 0 || y + height > img.height() || x + width > img.width() || height < 1 || width < 1) {
        throw ArgumentError("crop window outside image");
    }
    return ImageTensor(img.tensor().narrow(2, y, height).narrow(3, x, width).contiguous());
}

ImageTensor random_crop(const ImageTensor& img, int64_t size, Rng& rng) {
    if (size < 1 || size > std::min(img.height(), img.width())) {
        throw ArgumentError("crop size " + std::to_string(size) + " exceeds image " +
                            std::to_string(img.height()) + "x" + std::to_string(img.width()));
    }
    std::uniform_int_distribution<int64_t> dy(0, img.height() - size);
    std::uniform_int_distribution<int64_t> dx(0, img.width() - size);
    const auto y = dy(rng);
    const auto x = dx(rng);
    return crop(img, y, x, size, size);
}

PatchPair paired_crop(const ImageTensor& hr, const ImageTensor& lr, int64_t lr_size, ScaleFactor scale,
                      Rng& rng) {
    const int s = scale.value();
    if (hr.height() != lr.height() * s || hr.width() != lr.width() * s) {
        throw ArgumentError("HR dims must equal LR dims times the scale factor");
    }
    if (lr_size < 1 || lr_size > std::min(lr.height(), lr.width())) {
        throw ArgumentError("paired crop size exceeds LR image");
    }
    std::uniform_int_distribution<int64_t> dy(0, lr.height() - lr_size);
    std::uniform_int_distribution<int64_t> dx(0, lr.width() - lr_size);
    const auto y = dy(rng);
    const auto x = dx(rng);
    return {crop(hr, y * s, x * s, lr_size * s, lr_size * s), crop(lr, y, x, lr_size, lr_size)};
}

AugmentFlags draw_augment(Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    AugmentFlags flags;
    flags.hflip = coin(rng);
    flags.rot90 = coin(rng);
    return flags;
}

ImageTensor apply_augment(const ImageTensor& img, AugmentFlags flags) {
    auto t = img.tensor();
    if (flags.hflip) t = t.flip({3});
    if (flags.rot90) t = torch::rot90(t, 1, {2, 3});
    return ImageTensor(t.contiguous());
}

ImageTensor augment(const ImageTensor& img, Rng& rng) { return apply_augment(img, draw_augment(rng)); }

ImageTensor stack_batch(const std::vector<ImageTensor>& items) {
    if (items.empty()) throw ArgumentError("cannot stack an empty batch");
    std::vector<torch::Tensor> parts;
    parts.reserve(items.size());
    for (const auto& it : items) parts.push_back(it.tensor());
    return ImageTensor(torch::cat(parts, 0));
}

}  // namespace unpaired_sr
