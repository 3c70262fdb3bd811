#pragma once

#include <cstddef>
#include <vector>

namespace ganspire::nn {

// Planar C x H x W buffer.
template <class T>
struct Tensor {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int channels, int height, int width, T fill = T(0))
        : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width, fill) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
    T* plane(int ch) { return v.data() + ch * plane_size(); }
    const T* plane(int ch) const { return v.data() + ch * plane_size(); }
    T& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    const T& at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
    void resize(int channels, int height, int width) {
        c = channels;
        h = height;
        w = width;
        v.assign(static_cast<std::size_t>(channels) * height * width, T(0));
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.c = c;
        out.h = h;
        out.w = w;
        out.v.assign(v.begin(), v.end());
        return out;
    }

    bool operator==(const Tensor&) const = default;
};

}  // namespace ganspire::nn
