#pragma once

// Forward/backward primitives for the small convolutional networks used by
// the generator, discriminator and perceptual embedder. All weights use the
// equalized-learning-rate convention: parameters are stored ~N(0, 1/lrmul)
// and scaled at runtime by gain * lrmul / sqrt(fan_in).
//
// Backward functions *accumulate* into parameter gradients and overwrite the
// input gradient.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ganspire/nn/tensor.hpp"
#include "ganspire/simd/kernels.hpp"

namespace ganspire::nn {

inline constexpr double kLreluSlope = 0.2;
inline const double kSqrt2 = std::sqrt(2.0);

template <class T>
struct Conv {
    int cin = 0;
    int cout = 0;
    int k = 1;
    T gain = T(1);
    std::vector<T> weight;  // cout x (cin * k * k)
    std::vector<T> bias;    // cout, or empty for no bias

    std::size_t fan_in() const { return static_cast<std::size_t>(cin) * k * k; }
    T wscale() const { return gain / std::sqrt(static_cast<T>(fan_in())); }

    template <class U>
    Conv<U> cast() const {
        return Conv<U>{cin, cout, k, static_cast<U>(gain), {weight.begin(), weight.end()}, {bias.begin(), bias.end()}};
    }
};

template <class T>
struct Dense {
    int in = 0;
    int out = 0;
    T gain = T(1);
    T lrmul = T(1);
    std::vector<T> weight;  // out x in
    std::vector<T> bias;    // out

    T wscale() const { return gain * lrmul / std::sqrt(static_cast<T>(in)); }

    template <class U>
    Dense<U> cast() const {
        return Dense<U>{in,
                        out,
                        static_cast<U>(gain),
                        static_cast<U>(lrmul),
                        {weight.begin(), weight.end()},
                        {bias.begin(), bias.end()}};
    }
};

template <class T>
Conv<T> make_conv(int cin, int cout, int k, T gain, bool with_bias, std::mt19937_64& rng) {
    Conv<T> c{cin, cout, k, gain, {}, {}};
    std::normal_distribution<double> nd(0.0, 1.0);
    c.weight.resize(static_cast<std::size_t>(cout) * cin * k * k);
    for (auto& x : c.weight) x = static_cast<T>(nd(rng));
    if (with_bias) c.bias.assign(cout, T(0));
    return c;
}

template <class T>
Dense<T> make_dense(int in, int out, T gain, T lrmul, std::mt19937_64& rng) {
    Dense<T> d{in, out, gain, lrmul, {}, {}};
    std::normal_distribution<double> nd(0.0, 1.0);
    d.weight.resize(static_cast<std::size_t>(out) * in);
    for (auto& x : d.weight) x = static_cast<T>(nd(rng) / static_cast<double>(lrmul));
    d.bias.assign(out, T(0));
    return d;
}

// ---------------------------------------------------------------------------
// Convolution ("same" padding, stride 1) via im2col.

template <class T>
void im2col(const Tensor<T>& in, int k, std::vector<T>& col) {
    const int pad = k / 2;
    const int H = in.h;
    const int W = in.w;
    const std::size_t HW = in.plane_size();
    col.assign(static_cast<std::size_t>(in.c) * k * k * HW, T(0));
    for (int ci = 0; ci < in.c; ++ci) {
        const T* src = in.plane(ci);
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * HW;
                const int dy = ky - pad;
                const int dx = kx - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                for (int y = y0; y < y1; ++y)
                    std::copy(src + (y + dy) * W + x0 + dx, src + (y + dy) * W + x1 + dx, dst + y * W + x0);
            }
    }
}

template <class T>
void col2im(const std::vector<T>& col, int k, Tensor<T>& out) {
    const int pad = k / 2;
    const int H = out.h;
    const int W = out.w;
    const std::size_t HW = out.plane_size();
    std::fill(out.v.begin(), out.v.end(), T(0));
    for (int ci = 0; ci < out.c; ++ci) {
        T* dst = out.plane(ci);
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * HW;
                const int dy = ky - pad;
                const int dx = kx - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                for (int y = y0; y < y1; ++y) {
                    T* d = dst + (y + dy) * W + dx;
                    const T* s = src + y * W;
                    for (int x = x0; x < x1; ++x) d[x] += s[x];
                }
            }
    }
}

template <class T>
struct ConvCache {
    std::vector<T> col;
    int cin = 0;
    int h = 0;
    int w = 0;
};

template <class T>
void conv_forward(const Conv<T>& conv, const Tensor<T>& in, Tensor<T>& out, ConvCache<T>& cache) {
    im2col(in, conv.k, cache.col);
    cache.cin = in.c;
    cache.h = in.h;
    cache.w = in.w;
    out.resize(conv.cout, in.h, in.w);
    const std::size_t HW = in.plane_size();
    const std::size_t K = conv.fan_in();
    const T s = conv.wscale();
    for (int co = 0; co < conv.cout; ++co) {
        T* o = out.plane(co);
        if (!conv.bias.empty()) std::fill(o, o + HW, conv.bias[co]);
        const T* wrow = conv.weight.data() + co * K;
        for (std::size_t j = 0; j < K; ++j) simd::axpy(s * wrow[j], cache.col.data() + j * HW, o, HW);
    }
}

template <class T>
void conv_forward(const Conv<T>& conv, const Tensor<T>& in, Tensor<T>& out) {
    ConvCache<T> scratch;
    conv_forward(conv, in, out, scratch);
}

template <class T>
void conv_backward(const Conv<T>& conv, const ConvCache<T>& cache, const Tensor<T>& dout, Conv<T>* grad,
                   Tensor<T>* din) {
    const std::size_t HW = static_cast<std::size_t>(cache.h) * cache.w;
    const std::size_t K = conv.fan_in();
    const T s = conv.wscale();
    std::vector<T> dcol;
    if (din != nullptr) dcol.assign(K * HW, T(0));
    for (int co = 0; co < conv.cout; ++co) {
        const T* g = dout.plane(co);
        if (grad != nullptr) {
            if (!conv.bias.empty()) grad->bias[co] += simd::sum(g, HW);
            T* gw = grad->weight.data() + co * K;
            for (std::size_t j = 0; j < K; ++j) gw[j] += s * simd::dot(g, cache.col.data() + j * HW, HW);
        }
        if (din != nullptr) {
            const T* wrow = conv.weight.data() + co * K;
            for (std::size_t j = 0; j < K; ++j) simd::axpy(s * wrow[j], g, dcol.data() + j * HW, HW);
        }
    }
    if (din != nullptr) {
        din->resize(cache.cin, cache.h, cache.w);
        col2im(dcol, conv.k, *din);
    }
}

// ---------------------------------------------------------------------------
// Fully connected.

template <class T>
void dense_forward(const Dense<T>& d, const std::vector<T>& x, std::vector<T>& y) {
    y.resize(d.out);
    const T s = d.wscale();
    for (int o = 0; o < d.out; ++o)
        y[o] = d.bias[o] * d.lrmul + s * simd::dot(d.weight.data() + static_cast<std::size_t>(o) * d.in, x.data(),
                                                   static_cast<std::size_t>(d.in));
}

template <class T>
void dense_backward(const Dense<T>& d, const std::vector<T>& x, const std::vector<T>& dy, Dense<T>* grad,
                    std::vector<T>* dx) {
    const T s = d.wscale();
    if (dx != nullptr) dx->assign(d.in, T(0));
    for (int o = 0; o < d.out; ++o) {
        const std::size_t row = static_cast<std::size_t>(o) * d.in;
        if (grad != nullptr) {
            grad->bias[o] += d.lrmul * dy[o];
            simd::axpy(s * dy[o], x.data(), grad->weight.data() + row, static_cast<std::size_t>(d.in));
        }
        if (dx != nullptr) simd::axpy(s * dy[o], d.weight.data() + row, dx->data(), static_cast<std::size_t>(d.in));
    }
}

// ---------------------------------------------------------------------------
// Pointwise.

template <class T>
void lrelu_forward(std::vector<T>& x) {
    const T slope = static_cast<T>(kLreluSlope);
    for (auto& v : x) v = v > T(0) ? v : v * slope;
}

// `y` is the activation output; its sign equals the input's sign.
template <class T>
void lrelu_backward(const std::vector<T>& y, std::vector<T>& dy) {
    const T slope = static_cast<T>(kLreluSlope);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!(y[i] > T(0))) dy[i] *= slope;
}

template <class T>
void relu_forward(std::vector<T>& x) {
    for (auto& v : x) v = v > T(0) ? v : T(0);
}

template <class T>
void relu_backward(const std::vector<T>& y, std::vector<T>& dy) {
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!(y[i] > T(0))) dy[i] = T(0);
}

template <class T>
void tanh_forward(std::vector<T>& x) {
    for (auto& v : x) v = std::tanh(v);
}

template <class T>
void tanh_backward(const std::vector<T>& y, std::vector<T>& dy) {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] *= T(1) - y[i] * y[i];
}

template <class T>
void add_channel_bias(Tensor<T>& x, const std::vector<T>& b) {
    const std::size_t HW = x.plane_size();
    for (int c = 0; c < x.c; ++c) {
        T* p = x.plane(c);
        for (std::size_t i = 0; i < HW; ++i) p[i] += b[c];
    }
}

template <class T>
void channel_bias_backward(const Tensor<T>& dy, std::vector<T>& db) {
    for (int c = 0; c < dy.c; ++c) db[c] += simd::sum(dy.plane(c), dy.plane_size());
}

// x[c] += strength[c] * noise, noise being a single H x W plane.
template <class T>
void add_noise(Tensor<T>& x, const std::vector<T>& strength, const std::vector<T>& noise) {
    const std::size_t HW = x.plane_size();
    for (int c = 0; c < x.c; ++c) simd::axpy(strength[c], noise.data(), x.plane(c), HW);
}

template <class T>
void noise_backward(const Tensor<T>& dy, const std::vector<T>& noise, std::vector<T>& dstrength) {
    for (int c = 0; c < dy.c; ++c) dstrength[c] += simd::dot(dy.plane(c), noise.data(), dy.plane_size());
}

// ---------------------------------------------------------------------------
// Resampling.

template <class T>
void upsample2x(const Tensor<T>& in, Tensor<T>& out) {
    out.resize(in.c, in.h * 2, in.w * 2);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
}

template <class T>
void upsample2x_backward(const Tensor<T>& dout, Tensor<T>& din) {
    din.resize(dout.c, dout.h / 2, dout.w / 2);
    for (int c = 0; c < dout.c; ++c)
        for (int y = 0; y < dout.h; ++y)
            for (int x = 0; x < dout.w; ++x) din.at(c, y / 2, x / 2) += dout.at(c, y, x);
}

template <class T>
void avgpool2x(const Tensor<T>& in, Tensor<T>& out) {
    out.resize(in.c, in.h / 2, in.w / 2);
    for (int c = 0; c < out.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(c, y, x) = T(0.25) * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                             in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1));
}

template <class T>
void avgpool2x_backward(const Tensor<T>& dout, Tensor<T>& din) {
    din.resize(dout.c, dout.h * 2, dout.w * 2);
    for (int c = 0; c < din.c; ++c)
        for (int y = 0; y < din.h; ++y)
            for (int x = 0; x < din.w; ++x) din.at(c, y, x) = T(0.25) * dout.at(c, y / 2, x / 2);
}

// ---------------------------------------------------------------------------
// Adaptive instance normalization: y = (1 + ys[c]) * normalize(x[c]) + yb[c].

template <class T>
struct AdaINCache {
    Tensor<T> xhat;
    std::vector<T> inv_std;
    std::vector<T> scale;
};

template <class T>
void adain_forward(const Tensor<T>& x, const T* ys, const T* yb, Tensor<T>& out, AdaINCache<T>& cache) {
    const std::size_t HW = x.plane_size();
    const T n = static_cast<T>(HW);
    cache.xhat.resize(x.c, x.h, x.w);
    cache.inv_std.resize(x.c);
    cache.scale.resize(x.c);
    out.resize(x.c, x.h, x.w);
    for (int c = 0; c < x.c; ++c) {
        const T* p = x.plane(c);
        const T mean = simd::sum(p, HW) / n;
        T var = 0;
        for (std::size_t i = 0; i < HW; ++i) var += (p[i] - mean) * (p[i] - mean);
        var /= n;
        const T inv = T(1) / std::sqrt(var + T(1e-8));
        cache.inv_std[c] = inv;
        cache.scale[c] = T(1) + ys[c];
        T* xh = cache.xhat.plane(c);
        T* o = out.plane(c);
        for (std::size_t i = 0; i < HW; ++i) {
            xh[i] = (p[i] - mean) * inv;
            o[i] = cache.scale[c] * xh[i] + yb[c];
        }
    }
}

template <class T>
void adain_backward(const AdaINCache<T>& cache, const Tensor<T>& dout, Tensor<T>& dx, T* dys, T* dyb) {
    const std::size_t HW = dout.plane_size();
    const T n = static_cast<T>(HW);
    dx.resize(dout.c, dout.h, dout.w);
    for (int c = 0; c < dout.c; ++c) {
        const T* g = dout.plane(c);
        const T* xh = cache.xhat.plane(c);
        dys[c] += simd::dot(g, xh, HW);
        dyb[c] += simd::sum(g, HW);
        T mean_g = 0, mean_gx = 0;
        for (std::size_t i = 0; i < HW; ++i) {
            mean_g += g[i];
            mean_gx += g[i] * xh[i];
        }
        mean_g = mean_g * cache.scale[c] / n;
        mean_gx = mean_gx * cache.scale[c] / n;
        T* d = dx.plane(c);
        for (std::size_t i = 0; i < HW; ++i)
            d[i] = cache.inv_std[c] * (g[i] * cache.scale[c] - mean_g - xh[i] * mean_gx);
    }
}

// ---------------------------------------------------------------------------
// Pixel norm over a vector: y = x / sqrt(mean(x^2) + eps).

template <class T>
T pixel_norm_forward(const std::vector<T>& x, std::vector<T>& y) {
    T ms = 0;
    for (auto v : x) ms += v * v;
    ms /= static_cast<T>(x.size());
    const T r = T(1) / std::sqrt(ms + T(1e-8));
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * r;
    return r;
}

template <class T>
void pixel_norm_backward(const std::vector<T>& x, T r, const std::vector<T>& dy, std::vector<T>& dx) {
    T xdy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) xdy += x[i] * dy[i];
    const T k = r * r * r * xdy / static_cast<T>(x.size());
    dx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = r * dy[i] - k * x[i];
}

}  // namespace ganspire::nn
