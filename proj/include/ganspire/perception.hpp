#pragma once

// Perceptual distance dist(a, b) in [0, 1].
//
// Every backend maps an image to an Embedding: a flat vector split into
// weighted segments. The raw distance is sum_k weight_k * ||a_k - b_k||^2 and
// the reported distance is min(raw / calibration_max, 1). Two backends exist:
//
//   "deep"   LPIPS-form distance over a frozen, seeded convolutional
//            embedder: per layer, channel vectors are unit-normalised at each
//            location, squared differences are averaged over locations, and
//            layers are averaged.
//   "pixel"  Multi-scale mean squared pixel difference ([0,1] pixels, box
//            pyramid of up to four scales). Black vs white is exactly 1.
//
// Downstream code only sees Backend; nothing branches on the backend kind.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/image.hpp"
#include "ganspire/nn/layers.hpp"

namespace ganspire::perception {

struct Segment {
    std::size_t offset = 0;
    std::size_t length = 0;
    double weight = 0.0;
    bool operator==(const Segment&) const = default;
};

template <class T>
struct EmbeddingT {
    std::vector<T> values;
    std::vector<Segment> segments;
};
using Embedding = EmbeddingT<float>;

template <class T>
double raw_distance(const EmbeddingT<T>& a, const EmbeddingT<T>& b);

// ---------------------------------------------------------------------------
// Frozen random convolutional embedder (also the FID feature extractor).

template <class T>
struct FeatureNetT {
    std::vector<nn::Conv<T>> convs;  // conv3x3 + relu, 2x average pool between layers
};

template <class T>
struct FeatureCache {
    std::vector<nn::ConvCache<T>> convs;
    std::vector<nn::Tensor<T>> features;  // relu outputs per layer
};

FeatureNetT<float> make_feature_net(std::uint64_t seed, const std::vector<int>& widths = {16, 32, 32});
// FNV-1a over the little-endian bytes of all weights.
std::uint64_t weights_hash(const FeatureNetT<float>& net);

template <class T>
void feature_forward(const FeatureNetT<T>& net, const nn::Tensor<T>& x, FeatureCache<T>& cache);
template <class T>
void feature_backward(const FeatureNetT<T>& net, const FeatureCache<T>& cache, std::vector<nn::Tensor<T>>& dfeat,
                      nn::Tensor<T>& dx);

// ---------------------------------------------------------------------------
// Templated backend cores. Images are 3 x H x W tensors with values in [0,1].

template <class T>
class DeepCore {
public:
    DeepCore() = default;
    DeepCore(FeatureNetT<T> net, int max_side) : net_(std::move(net)), max_side_(max_side) {}
    EmbeddingT<T> embed(const nn::Tensor<T>& img) const;
    // Raw distance to `target`; fills d raw / d img when grad != nullptr.
    double raw_and_gradient(const nn::Tensor<T>& img, const EmbeddingT<T>& target, nn::Tensor<T>* grad) const;
    const FeatureNetT<T>& net() const { return net_; }

    template <class U>
    DeepCore<U> cast() const;

private:
    int downsample_factor(const nn::Tensor<T>& img) const;
    FeatureNetT<T> net_;
    int max_side_ = 256;
};

template <class T>
class PixelCore {
public:
    explicit PixelCore(int max_scales = 4) : max_scales_(max_scales) {}
    EmbeddingT<T> embed(const nn::Tensor<T>& img) const;
    double raw_and_gradient(const nn::Tensor<T>& img, const EmbeddingT<T>& target, nn::Tensor<T>* grad) const;
    int max_scales() const { return max_scales_; }

private:
    int max_scales_;
};

// ---------------------------------------------------------------------------
// Runtime-polymorphic float interface.

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual double calibration_max() const = 0;
    virtual Embedding embed(const Image& img) const = 0;
    // raw(img, target) / calibration_max (not clamped, so it stays
    // differentiable) and its gradient w.r.t. the [0,1] image.
    virtual double loss_and_gradient(const Image& img, const Embedding& target, Image* grad) const = 0;
};

struct BackendConfig {
    std::string kind = "deep";  // "deep" | "pixel"
    std::uint64_t seed = 20220429;
    int max_side = 256;
    int pixel_scales = 4;
    // Measured with `ganspire calibrate` on the default fixture corpus; see README.
    double calibration_max = 0.0;  // 0 selects the built-in value for the kind
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

inline constexpr double kDeepCalibrationMax = 1.484217;
inline constexpr double kPixelCalibrationMax = 1.0;

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg = {});

// The DeepCore behind a "deep" backend, or nullptr.
const DeepCore<float>* deep_core(const Backend& b);

double normalize_distance(double raw, double calibration_max);

// Throws ContractError on a resolution mismatch.
double dist(const Backend& backend, const Image& a, const Image& b);
double dist(const Backend& backend, const Embedding& a, const Embedding& b);

struct DistanceMatrix {
    int n = 0;
    std::vector<double> values;  // row-major n x n

    DistanceMatrix() = default;
    explicit DistanceMatrix(int size) : n(size), values(static_cast<std::size_t>(size) * size, 0.0) {}
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
    // Symmetric, zero diagonal, entries in [0,1].
    bool valid() const;
};

// Throws InputError on an empty list; ContractError (with the offending
// index) on mixed resolutions.
DistanceMatrix pairwise(const Backend& backend, std::span<const Image> images);
DistanceMatrix pairwise(const Backend& backend, std::span<const Embedding> embeddings);

void write_csv(const DistanceMatrix& m, const std::filesystem::path& path);

// Largest raw distance over all pairs of `images` plus a constant black and a
// constant white image of the same size.
double measure_calibration(const Backend& backend, std::span<const Image> images);

}  // namespace ganspire::perception
