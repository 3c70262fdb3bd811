#pragma once

// Style-based generator / discriminator pair.
//
// The synthesis network has R resolution levels (4x4 up to 4 * 2^(R-1)) and
// S = 2R style slots: each level runs two (conv ->) noise -> bias -> lrelu ->
// AdaIN stages, and each AdaIN is modulated by its own row of the StyleCode.
// Slot 0 starts from a learned constant; every later level upsamples first.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/errors.hpp"
#include "ganspire/image.hpp"
#include "ganspire/nn/layers.hpp"

namespace ganspire::gan {

struct GeneratorConfig {
    int levels = 4;          // R
    int latent_dim = 64;     // d (512 at full scale)
    int mapping_layers = 4;  // 8 in the original architecture
    int fmap_base = 64;
    int fmap_min = 16;
    int fmap_max = 64;
    std::uint64_t seed = 1;        // parameter initialisation
    std::uint64_t noise_seed = 7;  // pinned per-slot noise for inference

    int slots() const { return 2 * levels; }
    int base_resolution() const { return 4; }
    int final_resolution() const { return 4 << (levels - 1); }
    int resolution_at(int level) const { return 4 << level; }
    int channels(int level) const;
    void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

// One latent row per style slot, row-major S x d.
struct StyleCode {
    int slots = 0;
    int dim = 0;
    std::vector<float> values;

    StyleCode() = default;
    StyleCode(int s, int d) : slots(s), dim(d), values(static_cast<std::size_t>(s) * d, 0.0f) {}

    std::span<float> row(int i) { return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
    std::span<const float> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    bool operator==(const StyleCode&) const = default;
};

// ---------------------------------------------------------------------------
// Networks, templated on the arithmetic type so gradient checks can run in
// double while the pipeline runs in float.

template <class T>
struct Mapping {
    std::vector<nn::Dense<T>> layers;

    template <class F>
    void for_each_param(F&& f, const std::string& prefix = "mapping") {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            f(prefix + "." + std::to_string(i) + ".weight", layers[i].weight);
            f(prefix + "." + std::to_string(i) + ".bias", layers[i].bias);
        }
    }
};

template <class T>
struct SynthesisSlot {
    nn::Conv<T> conv;  // unused (cout == 0) for slot 0
    std::vector<T> noise_strength;
    std::vector<T> bias;
    nn::Dense<T> style;  // d -> 2C: [scale offsets, shifts]
};

template <class T>
struct Synthesis {
    nn::Tensor<T> const_input;
    std::vector<SynthesisSlot<T>> slots;
    nn::Conv<T> to_rgb;

    template <class F>
    void for_each_param(F&& f, const std::string& prefix = "synthesis") {
        f(prefix + ".const", const_input.v);
        for (std::size_t s = 0; s < slots.size(); ++s) {
            const std::string p = prefix + ".slot" + std::to_string(s);
            if (slots[s].conv.cout > 0) f(p + ".conv.weight", slots[s].conv.weight);
            f(p + ".noise_strength", slots[s].noise_strength);
            f(p + ".bias", slots[s].bias);
            f(p + ".style.weight", slots[s].style.weight);
            f(p + ".style.bias", slots[s].style.bias);
        }
        f(prefix + ".to_rgb.weight", to_rgb.weight);
        f(prefix + ".to_rgb.bias", to_rgb.bias);
    }
};

template <class T>
struct Discriminator {
    nn::Conv<T> from_rgb;
    std::vector<nn::Conv<T>> convs;  // pairs per level above 4x4, then the 4x4 conv
    nn::Dense<T> fc;
    nn::Dense<T> out;

    template <class F>
    void for_each_param(F&& f, const std::string& prefix = "discriminator") {
        f(prefix + ".from_rgb.weight", from_rgb.weight);
        f(prefix + ".from_rgb.bias", from_rgb.bias);
        for (std::size_t i = 0; i < convs.size(); ++i) {
            f(prefix + ".conv" + std::to_string(i) + ".weight", convs[i].weight);
            f(prefix + ".conv" + std::to_string(i) + ".bias", convs[i].bias);
        }
        f(prefix + ".fc.weight", fc.weight);
        f(prefix + ".fc.bias", fc.bias);
        f(prefix + ".out.weight", out.weight);
        f(prefix + ".out.bias", out.bias);
    }
};

template <class T>
struct MappingCache {
    std::vector<T> z;
    T norm_scale = 0;
    std::vector<std::vector<T>> inputs;   // input of each dense layer
    std::vector<std::vector<T>> outputs;  // lrelu output of each layer
};

template <class T>
struct SlotCache {
    nn::ConvCache<T> conv;
    int upsampled_from_h = 0;
    nn::Tensor<T> act;  // lrelu output, AdaIN input
    nn::AdaINCache<T> adain;
    std::vector<T> style_in;
};

template <class T>
struct SynthesisCache {
    std::vector<SlotCache<T>> slots;
    nn::ConvCache<T> rgb;
    nn::Tensor<T> out;  // tanh output in [-1, 1]
};

template <class T>
struct DiscriminatorCache {
    nn::ConvCache<T> from_rgb;
    nn::Tensor<T> from_rgb_act;
    std::vector<nn::ConvCache<T>> convs;
    std::vector<nn::Tensor<T>> conv_acts;
    std::vector<T> flat;
    std::vector<T> fc_act;
};

// Per-slot noise planes (one H x W plane per slot).
template <class T>
using NoiseMaps = std::vector<std::vector<T>>;

template <class T>
class ModelT {
public:
    GeneratorConfig config;
    Mapping<T> mapping;
    Synthesis<T> synthesis;
    Discriminator<T> discriminator;
    NoiseMaps<T> pinned_noise;

    ModelT() = default;
    explicit ModelT(const GeneratorConfig& cfg);

    template <class U>
    ModelT<U> cast() const;

    // Same architecture, all parameters zero (gradient / optimizer buffers).
    ModelT zeros_like() const;

    NoiseMaps<T> sample_noise(std::mt19937_64& rng) const;

    // w = mapping(z)
    void map_forward(const std::vector<T>& z, std::vector<T>& w, MappingCache<T>* cache) const;
    void map_backward(const MappingCache<T>& cache, const std::vector<T>& dw, Mapping<T>* grad) const;

    // code: S x d row-major. Output in [-1, 1], 3 x res x res.
    void synth_forward(const std::vector<T>& code, const NoiseMaps<T>& noise, SynthesisCache<T>& cache) const;
    // dout: gradient w.r.t. the [-1, 1] output. dcode (optional) is S x d.
    void synth_backward(const SynthesisCache<T>& cache, const NoiseMaps<T>& noise, const nn::Tensor<T>& dout,
                        Synthesis<T>* grad, std::vector<T>* dcode) const;

    // image in [-1, 1]; returns the logit.
    T disc_forward(const nn::Tensor<T>& image, DiscriminatorCache<T>* cache) const;
    void disc_backward(const DiscriminatorCache<T>& cache, T dlogit, Discriminator<T>* grad,
                       nn::Tensor<T>* dimage) const;

    template <class F>
    void for_each_param(F&& f) {
        mapping.for_each_param(f);
        synthesis.for_each_param(f);
        discriminator.for_each_param(f);
    }
    template <class F>
    void for_each_param(F&& f) const {
        const_cast<ModelT*>(this)->for_each_param([&](const std::string& n, std::vector<T>& v) {
            f(n, static_cast<const std::vector<T>&>(v));
        });
    }
};

using Model = ModelT<float>;

// ---------------------------------------------------------------------------
// Float pipeline operations.

// Throws InputError on wrong length or non-finite entries.
std::vector<float> map_latent(const Model& model, std::span<const float> z);
StyleCode broadcast(std::span<const float> w, int slots);
// Throws ContractError when the code's shape disagrees with the model.
Image synthesize(const Model& model, const StyleCode& code);
// Higher = more realistic. Throws ContractError on a resolution mismatch.
double discriminator_score(const Model& model, const Image& image);

std::vector<float> random_latent(const Model& model, std::mt19937_64& rng);

// Mean of map_latent over `samples` seeded random z. Used as the inversion
// warm start.
std::vector<float> mean_w(const Model& model, int samples, std::uint64_t seed);

// Helpers between the [0,1] Image and the network's [-1,1] tensor.
nn::Tensor<float> to_network_input(const Image& img);
Image from_network_output(const nn::Tensor<float>& t);

}  // namespace ganspire::gan

#include "ganspire/generator_impl.hpp"
