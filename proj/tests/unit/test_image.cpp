#include <gtest/gtest.h>

#include <random>

#include "ganspire/errors.hpp"
#include "ganspire/image.hpp"
#include "test_util.hpp"

using namespace ganspire;

namespace {

Rgb8Image random_rgb8(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> u(0, 255);
    Rgb8Image img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(u(rng));
    return img;
}

}  // namespace

TEST(Resize, ShapeContract) {
    std::mt19937_64 rng(1);
    const auto out = resize_to_square(random_rgb8(rng, 54, 96), 256);
    EXPECT_EQ(out.width, 256);
    EXPECT_EQ(out.height, 256);
    EXPECT_EQ(out.pixels.size(), 256u * 256u * 3u);
}

TEST(Resize, PortraitScreenshotTo256) {
    std::mt19937_64 rng(2);
    const auto out = resize_to_square(random_rgb8(rng, 540, 960), 256);
    EXPECT_EQ(out.width, 256);
    EXPECT_EQ(out.height, 256);
}

TEST(Resize, SquareInputIsIdentity) {
    std::mt19937_64 rng(3);
    const auto img = random_rgb8(rng, 256, 256);
    EXPECT_EQ(resize_to_square(img, 256), img);
}

TEST(Resize, ConstantColourStaysConstant) {
    Rgb8Image img(37, 91);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            img.at(x, y)[0] = 12;
            img.at(x, y)[1] = 200;
            img.at(x, y)[2] = 77;
        }
    const auto out = resize_to_square(img, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            ASSERT_EQ(out.at(x, y)[0], 12);
            ASSERT_EQ(out.at(x, y)[1], 200);
            ASSERT_EQ(out.at(x, y)[2], 77);
        }
}

TEST(Resize, Idempotent) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 5; ++i) {
        const auto once = resize_to_square(random_rgb8(rng, 30 + 7 * i, 50 + 3 * i), 32);
        EXPECT_EQ(resize_to_square(once, 32), once);
    }
}

TEST(Resize, Deterministic) {
    std::mt19937_64 rng(5);
    const auto img = random_rgb8(rng, 70, 120);
    EXPECT_EQ(resize_to_square(img, 64), resize_to_square(img, 64));
}

TEST(Resize, Errors) {
    EXPECT_THROW(resize_to_square(Rgb8Image{}, 64), InputError);
    Rgb8Image img(10, 10);
    EXPECT_THROW(resize_to_square(img, 48), InputError);
}

TEST(Codec, PngRoundTrip) {
    std::mt19937_64 rng(6);
    const auto img = random_rgb8(rng, 17, 23);
    const auto bytes = encode_png(img);
    EXPECT_EQ(sniff_format(bytes), ImageFormat::png);
    EXPECT_EQ(decode_image(bytes), img);

    const auto dir = testutil::temp_dir("codec");
    write_png(dir / "a.png", img);
    EXPECT_EQ(read_image(dir / "a.png"), img);
}

TEST(Codec, SniffRejectsText) {
    const std::string text = "hello, this is not an image";
    std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    EXPECT_EQ(sniff_format(bytes), ImageFormat::unknown);
    EXPECT_ANY_THROW(decode_image(bytes));
    const std::uint8_t jpeg_magic[] = {0xFF, 0xD8, 0xFF, 0xE0};
    EXPECT_EQ(sniff_format(jpeg_magic), ImageFormat::jpeg);
}

TEST(Convert, FloatRoundTrip) {
    std::mt19937_64 rng(7);
    const auto img = random_rgb8(rng, 9, 5);
    const Image f = to_float(img);
    for (float v : f.data) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
    }
    EXPECT_EQ(to_rgb8(f), img);
}

TEST(Convert, BoxDownsampleAverages) {
    Image img(4, 2);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 8; ++i) img.plane(c)[i] = static_cast<float>(i);
    const Image d = downsample_box(img, 2);
    ASSERT_EQ(d.width, 2);
    ASSERT_EQ(d.height, 1);
    EXPECT_FLOAT_EQ(d.plane(0)[0], (0 + 1 + 4 + 5) / 4.0f);
    EXPECT_FLOAT_EQ(d.plane(2)[1], (2 + 3 + 6 + 7) / 4.0f);
}
