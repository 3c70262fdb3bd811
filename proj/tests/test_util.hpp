#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "ganspire/generator.hpp"
#include "ganspire/image.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ganspire_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline ganspire::gan::GeneratorConfig tiny_config() {
    ganspire::gan::GeneratorConfig c;
    c.levels = 3;
    c.latent_dim = 8;
    c.mapping_layers = 2;
    c.fmap_base = 16;
    c.fmap_min = 4;
    c.fmap_max = 16;
    return c;
}

inline ganspire::Image random_image(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ganspire::Image img(w, h);
    for (auto& v : img.data) v = u(rng);
    return img;
}

// Smooth-ish image: a few random rectangles on a random background.
inline ganspire::Image blocky_image(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
    ganspire::Image img(w, h);
    for (int c = 0; c < 3; ++c) {
        const float bg = u(rng);
        for (std::size_t i = 0; i < img.plane_size(); ++i) img.plane(c)[i] = bg;
    }
    for (int r = 0; r < 4; ++r) {
        int x1 = px(rng), x2 = px(rng), y1 = py(rng), y2 = py(rng);
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        for (int c = 0; c < 3; ++c) {
            const float v = u(rng);
            for (int y = y1; y <= y2; ++y)
                for (int x = x1; x <= x2; ++x) img.plane(c)[y * w + x] = v;
        }
    }
    return img;
}

template <class T>
void randomize(std::vector<T>& v, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    for (auto& x : v) x = static_cast<T>(nd(rng));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

}  // namespace testutil

namespace testutil {

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
