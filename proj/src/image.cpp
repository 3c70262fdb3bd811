#include "ganspire/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include "ganspire/errors.hpp"

namespace ganspire {

Image to_float(const Rgb8Image& img) {
    Image out(img.width, img.height);
    const std::size_t n = out.plane_size();
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) out.data[c * n + i] = img.pixels[i * 3 + c] / 255.0f;
    return out;
}

Rgb8Image to_rgb8(const Image& img) {
    Rgb8Image out(img.width, img.height);
    const std::size_t n = img.plane_size();
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            const float v = std::clamp(img.data[c * n + i], 0.0f, 1.0f);
            out.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    return out;
}

Rgb8Image resize_bilinear(const Rgb8Image& img, int width, int height) {
    if (img.empty()) throw InputError("resize: zero-sized image");
    if (width <= 0 || height <= 0) throw InputError("resize: non-positive target size");
    if (img.width == width && img.height == height) return img;

    Rgb8Image out(width, height);
    const double sx = static_cast<double>(img.width) / width;
    const double sy = static_cast<double>(img.height) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(x0, y0)[c] * (1.0 - wx) + img.at(x1, y0)[c] * wx;
                const double bot = img.at(x0, y1)[c] * (1.0 - wx) + img.at(x1, y1)[c] * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                out.at(x, y)[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Rgb8Image resize_to_square(const Rgb8Image& img, int resolution) {
    if (resolution <= 0 || !std::has_single_bit(static_cast<unsigned>(resolution)))
        throw InputError("resize: resolution must be a power of two, got " + std::to_string(resolution));
    return resize_bilinear(img, resolution, resolution);
}

Image downsample_box(const Image& img, int factor) {
    if (factor <= 1) return img;
    const int w = img.width / factor;
    const int h = img.height / factor;
    Image out(w, h);
    const float inv = 1.0f / static_cast<float>(factor * factor);
    for (int c = 0; c < 3; ++c) {
        const float* src = img.plane(c);
        float* dst = out.plane(c);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += src[(y * factor + dy) * img.width + x * factor + dx];
                dst[y * w + x] = acc * inv;
            }
    }
    return out;
}

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return ImageFormat::png;
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
        return ImageFormat::jpeg;
    return ImageFormat::unknown;
}

namespace {

Rgb8Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw InputError(std::string("png decode: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    Rgb8Image out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw InputError(std::string("png decode: ") + image.message);
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

Rgb8Image decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    Rgb8Image out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw InputError(std::string("jpeg decode: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out = Rgb8Image(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace

Rgb8Image decode_image(std::span<const std::uint8_t> bytes) {
    switch (sniff_format(bytes)) {
        case ImageFormat::png: return decode_png(bytes);
        case ImageFormat::jpeg: return decode_jpeg(bytes);
        default: throw InputError("unsupported image format");
    }
}

std::vector<std::uint8_t> encode_png(const Rgb8Image& img) {
    if (img.empty()) throw InputError("png encode: empty image");
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw InputError(std::string("png encode: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw InputError(std::string("png encode: ") + image.message);
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Rgb8Image read_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const Rgb8Image& img) {
    write_file_bytes(path, encode_png(img));
}

}  // namespace ganspire
