#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ganspire {

// 8-bit RGB, interleaved row-major (H x W x 3). This is the on-disk form.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Rgb8Image() = default;
    Rgb8Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* at(int x, int y) const {
        return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    bool operator==(const Rgb8Image&) const = default;
};

// Float RGB in [0, 1], planar (3 x H x W). This is what the networks and
// distance backends consume.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, fill) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
    float* plane(int c) { return data.data() + c * plane_size(); }
    const float* plane(int c) const { return data.data() + c * plane_size(); }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
    bool operator==(const Image&) const = default;
};

Image to_float(const Rgb8Image& img);
Rgb8Image to_rgb8(const Image& img);

// Bilinear resampling with half-pixel centres and edge clamping. Same-size
// input is returned unchanged.
Rgb8Image resize_bilinear(const Rgb8Image& img, int width, int height);

// Non-uniform stretch to resolution x resolution. Throws InputError on an empty
// image or a resolution that is not a power of two.
Rgb8Image resize_to_square(const Rgb8Image& img, int resolution);

// Box-filter downsample of a float image by an integer factor.
Image downsample_box(const Image& img, int factor);

enum class ImageFormat { png, jpeg, unknown };
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

Rgb8Image decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Rgb8Image& img);

Rgb8Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Rgb8Image& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ganspire
