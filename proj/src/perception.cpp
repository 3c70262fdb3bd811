#include "ganspire/perception.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "ganspire/errors.hpp"

namespace ganspire::perception {

using nn::Tensor;

template <class T>
double raw_distance(const EmbeddingT<T>& a, const EmbeddingT<T>& b) {
    if (a.values.size() != b.values.size() || a.segments != b.segments)
        throw ContractError("embeddings have different layouts (images of different resolution?)");
    double raw = 0.0;
    for (const auto& s : a.segments)
        raw += s.weight * static_cast<double>(
                              simd::sum_sq_diff(a.values.data() + s.offset, b.values.data() + s.offset, s.length));
    return raw;
}

template double raw_distance(const EmbeddingT<float>&, const EmbeddingT<float>&);
template double raw_distance(const EmbeddingT<double>&, const EmbeddingT<double>&);

// ---------------------------------------------------------------------------

FeatureNetT<float> make_feature_net(std::uint64_t seed, const std::vector<int>& widths) {
    std::mt19937_64 rng(seed);
    FeatureNetT<float> net;
    int cin = 3;
    for (int w : widths) {
        net.convs.push_back(nn::make_conv<float>(cin, w, 3, static_cast<float>(nn::kSqrt2), false, rng));
        cin = w;
    }
    return net;
}

std::uint64_t weights_hash(const FeatureNetT<float>& net) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint8_t byte) {
        h ^= byte;
        h *= 1099511628211ULL;
    };
    for (const auto& c : net.convs)
        for (float w : c.weight) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(w);
            for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    return h;
}

template <class T>
void feature_forward(const FeatureNetT<T>& net, const Tensor<T>& x, FeatureCache<T>& cache) {
    const std::size_t L = net.convs.size();
    cache.convs.resize(L);
    cache.features.resize(L);
    Tensor<T> in = x;
    for (std::size_t l = 0; l < L; ++l) {
        if (l > 0) nn::avgpool2x(cache.features[l - 1], in);
        nn::conv_forward(net.convs[l], in, cache.features[l], cache.convs[l]);
        nn::relu_forward(cache.features[l].v);
    }
}

template <class T>
void feature_backward(const FeatureNetT<T>& net, const FeatureCache<T>& cache, std::vector<Tensor<T>>& dfeat,
                      Tensor<T>& dx) {
    Tensor<T> dpooled;
    for (std::size_t l = net.convs.size(); l-- > 0;) {
        nn::relu_backward(cache.features[l].v, dfeat[l].v);
        nn::conv_backward(net.convs[l], cache.convs[l], dfeat[l], static_cast<nn::Conv<T>*>(nullptr), &dpooled);
        if (l == 0) {
            dx = std::move(dpooled);
        } else {
            Tensor<T> up;
            nn::avgpool2x_backward(dpooled, up);
            // The pool drops a trailing odd row/column; those get no gradient.
            auto& prev = dfeat[l - 1];
            for (int c = 0; c < up.c; ++c)
                for (int y = 0; y < up.h; ++y)
                    for (int xx = 0; xx < up.w; ++xx) prev.at(c, y, xx) += up.at(c, y, xx);
        }
    }
}

template void feature_forward(const FeatureNetT<float>&, const Tensor<float>&, FeatureCache<float>&);
template void feature_forward(const FeatureNetT<double>&, const Tensor<double>&, FeatureCache<double>&);
template void feature_backward(const FeatureNetT<float>&, const FeatureCache<float>&, std::vector<Tensor<float>>&,
                               Tensor<float>&);
template void feature_backward(const FeatureNetT<double>&, const FeatureCache<double>&, std::vector<Tensor<double>>&,
                               Tensor<double>&);

// ---------------------------------------------------------------------------

namespace {

constexpr double kNormEps = 1e-10;

template <class T>
Tensor<T> box_downsample(const Tensor<T>& img, int f) {
    Tensor<T> out(img.c, img.h / f, img.w / f);
    const T inv = T(1) / static_cast<T>(f * f);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                T acc = 0;
                for (int dy = 0; dy < f; ++dy)
                    for (int dx = 0; dx < f; ++dx) acc += img.at(c, y * f + dy, x * f + dx);
                out.at(c, y, x) = acc * inv;
            }
    return out;
}

template <class T>
void box_downsample_backward(const Tensor<T>& dout, int f, Tensor<T>& din) {
    const T inv = T(1) / static_cast<T>(f * f);
    for (int c = 0; c < dout.c; ++c)
        for (int y = 0; y < dout.h; ++y)
            for (int x = 0; x < dout.w; ++x)
                for (int dy = 0; dy < f; ++dy)
                    for (int dx = 0; dx < f; ++dx) din.at(c, y * f + dy, x * f + dx) += dout.at(c, y, x) * inv;
}

}  // namespace

template <class T>
int DeepCore<T>::downsample_factor(const Tensor<T>& img) const {
    int f = 1;
    while (std::max(img.h, img.w) / f > max_side_) f *= 2;
    return f;
}

template <class T>
EmbeddingT<T> DeepCore<T>::embed(const Tensor<T>& img) const {
    EmbeddingT<T> out;
    Tensor<T> x = box_downsample(img, downsample_factor(img));
    for (auto& v : x.v) v = T(2) * v - T(1);
    FeatureCache<T> cache;
    feature_forward(net_, x, cache);
    const double L = static_cast<double>(cache.features.size());
    for (const auto& F : cache.features) {
        const std::size_t HW = F.plane_size();
        const std::size_t offset = out.values.size();
        out.values.resize(offset + F.size());
        T* dst = out.values.data() + offset;
        for (std::size_t p = 0; p < HW; ++p) {
            T n2 = 0;
            for (int c = 0; c < F.c; ++c) n2 += F.v[c * HW + p] * F.v[c * HW + p];
            const T s = std::sqrt(n2) + static_cast<T>(kNormEps);
            for (int c = 0; c < F.c; ++c) dst[c * HW + p] = F.v[c * HW + p] / s;
        }
        out.segments.push_back({offset, F.size(), 1.0 / (L * static_cast<double>(HW))});
    }
    return out;
}

template <class T>
double DeepCore<T>::raw_and_gradient(const Tensor<T>& img, const EmbeddingT<T>& target, Tensor<T>* grad) const {
    const int f = downsample_factor(img);
    Tensor<T> x = box_downsample(img, f);
    for (auto& v : x.v) v = T(2) * v - T(1);
    FeatureCache<T> cache;
    feature_forward(net_, x, cache);

    EmbeddingT<T> emb;
    std::vector<std::vector<T>> scales(cache.features.size());  // s = norm + eps per location
    std::vector<std::vector<T>> norms(cache.features.size());
    const double L = static_cast<double>(cache.features.size());
    for (std::size_t l = 0; l < cache.features.size(); ++l) {
        const auto& F = cache.features[l];
        const std::size_t HW = F.plane_size();
        const std::size_t offset = emb.values.size();
        emb.values.resize(offset + F.size());
        scales[l].resize(HW);
        norms[l].resize(HW);
        T* dst = emb.values.data() + offset;
        for (std::size_t p = 0; p < HW; ++p) {
            T n2 = 0;
            for (int c = 0; c < F.c; ++c) n2 += F.v[c * HW + p] * F.v[c * HW + p];
            norms[l][p] = std::sqrt(n2);
            scales[l][p] = norms[l][p] + static_cast<T>(kNormEps);
            for (int c = 0; c < F.c; ++c) dst[c * HW + p] = F.v[c * HW + p] / scales[l][p];
        }
        emb.segments.push_back({offset, F.size(), 1.0 / (L * static_cast<double>(HW))});
    }
    const double raw = raw_distance(emb, target);
    if (grad == nullptr) return raw;

    std::vector<Tensor<T>> dfeat(cache.features.size());
    for (std::size_t l = 0; l < cache.features.size(); ++l) {
        const auto& F = cache.features[l];
        const auto& seg = emb.segments[l];
        const std::size_t HW = F.plane_size();
        const T w2 = static_cast<T>(2.0 * seg.weight);
        dfeat[l] = Tensor<T>(F.c, F.h, F.w);
        const T* a = emb.values.data() + seg.offset;
        const T* b = target.values.data() + seg.offset;
        std::vector<T> dn(F.c);
        for (std::size_t p = 0; p < HW; ++p) {
            T dot = 0;
            for (int c = 0; c < F.c; ++c) {
                dn[c] = w2 * (a[c * HW + p] - b[c * HW + p]);
                dot += F.v[c * HW + p] * dn[c];
            }
            const T s = scales[l][p];
            const T n = norms[l][p];
            const T k = n > T(0) ? dot / (s * s * n) : T(0);
            for (int c = 0; c < F.c; ++c) dfeat[l].v[c * HW + p] = dn[c] / s - F.v[c * HW + p] * k;
        }
    }
    Tensor<T> dx;
    feature_backward(net_, cache, dfeat, dx);
    for (auto& v : dx.v) v *= T(2);
    if (f == 1) {
        *grad = std::move(dx);
    } else {
        *grad = Tensor<T>(img.c, img.h, img.w);
        box_downsample_backward(dx, f, *grad);
    }
    return raw;
}

template <class T>
template <class U>
DeepCore<U> DeepCore<T>::cast() const {
    FeatureNetT<U> net;
    for (const auto& c : net_.convs) net.convs.push_back(c.template cast<U>());
    return DeepCore<U>(std::move(net), max_side_);
}

template class DeepCore<float>;
template class DeepCore<double>;
template DeepCore<double> DeepCore<float>::cast<double>() const;

template <class T>
EmbeddingT<T> PixelCore<T>::embed(const Tensor<T>& img) const {
    std::vector<Tensor<T>> pyramid{img};
    while (static_cast<int>(pyramid.size()) < max_scales_ && pyramid.back().h >= 8 && pyramid.back().w >= 8) {
        Tensor<T> next;
        nn::avgpool2x(pyramid.back(), next);
        pyramid.push_back(std::move(next));
    }
    EmbeddingT<T> out;
    const double K = static_cast<double>(pyramid.size());
    for (const auto& level : pyramid) {
        const std::size_t offset = out.values.size();
        out.values.insert(out.values.end(), level.v.begin(), level.v.end());
        out.segments.push_back({offset, level.size(), 1.0 / (K * static_cast<double>(level.size()))});
    }
    return out;
}

template <class T>
double PixelCore<T>::raw_and_gradient(const Tensor<T>& img, const EmbeddingT<T>& target, Tensor<T>* grad) const {
    const EmbeddingT<T> emb = embed(img);
    const double raw = raw_distance(emb, target);
    if (grad == nullptr) return raw;

    // Walk the pyramid from coarsest to finest, pushing gradients down.
    std::vector<std::pair<int, int>> dims{{img.h, img.w}};
    for (std::size_t s = 1; s < emb.segments.size(); ++s) dims.push_back({dims.back().first / 2, dims.back().second / 2});
    Tensor<T> g;
    for (std::size_t s = emb.segments.size(); s-- > 0;) {
        const auto& seg = emb.segments[s];
        Tensor<T> level(img.c, dims[s].first, dims[s].second);
        if (s + 1 < emb.segments.size()) {
            Tensor<T> up;
            nn::avgpool2x_backward(g, up);
            for (int c = 0; c < up.c; ++c)
                for (int y = 0; y < up.h; ++y)
                    for (int x = 0; x < up.w; ++x) level.at(c, y, x) = up.at(c, y, x);
        }
        const T w2 = static_cast<T>(2.0 * seg.weight);
        for (std::size_t i = 0; i < seg.length; ++i)
            level.v[i] += w2 * (emb.values[seg.offset + i] - target.values[seg.offset + i]);
        g = std::move(level);
    }
    *grad = std::move(g);
    return raw;
}

template class PixelCore<float>;
template class PixelCore<double>;

// ---------------------------------------------------------------------------

namespace {

Tensor<float> as_tensor(const Image& img) {
    Tensor<float> t(3, img.height, img.width);
    t.v = img.data;
    return t;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

class DeepBackend final : public Backend {
public:
    DeepBackend(const BackendConfig& cfg)
        : core_(make_feature_net(cfg.seed), cfg.max_side),
          cal_(cfg.calibration_max > 0 ? cfg.calibration_max : kDeepCalibrationMax),
          id_("deep/v1:" + hex64(weights_hash(core_.net()))) {}

    std::string id() const override { return id_; }
    double calibration_max() const override { return cal_; }
    Embedding embed(const Image& img) const override { return core_.embed(as_tensor(img)); }
    double loss_and_gradient(const Image& img, const Embedding& target, Image* grad) const override {
        Tensor<float> g;
        const double raw = core_.raw_and_gradient(as_tensor(img), target, grad ? &g : nullptr);
        if (grad != nullptr) {
            *grad = Image(img.width, img.height);
            const float inv = static_cast<float>(1.0 / cal_);
            for (std::size_t i = 0; i < g.v.size(); ++i) grad->data[i] = g.v[i] * inv;
        }
        return raw / cal_;
    }
    const DeepCore<float>& core() const { return core_; }

private:
    DeepCore<float> core_;
    double cal_;
    std::string id_;
};

class PixelBackend final : public Backend {
public:
    PixelBackend(const BackendConfig& cfg)
        : core_(cfg.pixel_scales),
          cal_(cfg.calibration_max > 0 ? cfg.calibration_max : kPixelCalibrationMax),
          id_("pixel/v1:scales=" + std::to_string(cfg.pixel_scales)) {}

    std::string id() const override { return id_; }
    double calibration_max() const override { return cal_; }
    Embedding embed(const Image& img) const override { return core_.embed(as_tensor(img)); }
    double loss_and_gradient(const Image& img, const Embedding& target, Image* grad) const override {
        Tensor<float> g;
        const double raw = core_.raw_and_gradient(as_tensor(img), target, grad ? &g : nullptr);
        if (grad != nullptr) {
            *grad = Image(img.width, img.height);
            const float inv = static_cast<float>(1.0 / cal_);
            for (std::size_t i = 0; i < g.v.size(); ++i) grad->data[i] = g.v[i] * inv;
        }
        return raw / cal_;
    }

private:
    PixelCore<float> core_;
    double cal_;
    std::string id_;
};

}  // namespace

void to_json(nlohmann::json& j, const BackendConfig& c) {
    j = nlohmann::json{{"kind", c.kind},
                       {"seed", c.seed},
                       {"max_side", c.max_side},
                       {"pixel_scales", c.pixel_scales},
                       {"calibration_max", c.calibration_max}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
    c.kind = j.value("kind", c.kind);
    c.seed = j.value("seed", c.seed);
    c.max_side = j.value("max_side", c.max_side);
    c.pixel_scales = j.value("pixel_scales", c.pixel_scales);
    c.calibration_max = j.value("calibration_max", c.calibration_max);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (cfg.kind == "deep") return std::make_unique<DeepBackend>(cfg);
    if (cfg.kind == "pixel") return std::make_unique<PixelBackend>(cfg);
    throw InputError("unknown perception backend '" + cfg.kind + "'");
}

const DeepCore<float>* deep_core(const Backend& b) {
    const auto* deep = dynamic_cast<const DeepBackend*>(&b);
    return deep ? &deep->core() : nullptr;
}

double normalize_distance(double raw, double calibration_max) { return std::min(raw / calibration_max, 1.0); }

double dist(const Backend& backend, const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw ContractError("dist: resolution mismatch " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                            " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    return dist(backend, backend.embed(a), backend.embed(b));
}

double dist(const Backend& backend, const Embedding& a, const Embedding& b) {
    return normalize_distance(raw_distance(a, b), backend.calibration_max());
}

bool DistanceMatrix::valid() const {
    for (int i = 0; i < n; ++i) {
        if (at(i, i) != 0.0) return false;
        for (int j = 0; j < n; ++j) {
            const double v = at(i, j);
            if (!(v >= 0.0 && v <= 1.0) || v != at(j, i)) return false;
        }
    }
    return true;
}

DistanceMatrix pairwise(const Backend& backend, std::span<const Image> images) {
    if (images.empty()) throw InputError("pairwise: no images");
    std::vector<Embedding> emb;
    emb.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0]))
            throw ContractError("pairwise: image " + std::to_string(i) + " has a different resolution than image 0");
        emb.push_back(backend.embed(images[i]));
    }
    return pairwise(backend, emb);
}

DistanceMatrix pairwise(const Backend& backend, std::span<const Embedding> embeddings) {
    if (embeddings.empty()) throw InputError("pairwise: no images");
    const int n = static_cast<int>(embeddings.size());
    DistanceMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d;
            try {
                d = dist(backend, embeddings[i], embeddings[j]);
            } catch (const ContractError& e) {
                throw ContractError("pairwise(" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
            }
            m.at(i, j) = d;
            m.at(j, i) = d;
        }
    return m;
}

void write_csv(const DistanceMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(17);
    for (int i = 0; i < m.n; ++i) {
        for (int j = 0; j < m.n; ++j) out << (j ? "," : "") << m.at(i, j);
        out << '\n';
    }
}

double measure_calibration(const Backend& backend, std::span<const Image> images) {
    if (images.empty()) throw InputError("calibration needs at least one image");
    std::vector<Embedding> emb;
    emb.push_back(backend.embed(Image(images[0].width, images[0].height, 0.0f)));
    emb.push_back(backend.embed(Image(images[0].width, images[0].height, 1.0f)));
    for (const auto& img : images) emb.push_back(backend.embed(img));
    double best = 0.0;
    for (std::size_t i = 0; i < emb.size(); ++i)
        for (std::size_t j = i + 1; j < emb.size(); ++j) best = std::max(best, raw_distance(emb[i], emb[j]));
    return best;
}

}  // namespace ganspire::perception
