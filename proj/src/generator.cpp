#include "ganspire/generator.hpp"

#include <algorithm>
#include <cmath>

namespace ganspire::gan {

int GeneratorConfig::channels(int level) const {
    return std::clamp(fmap_base >> level, fmap_min, fmap_max);
}

void GeneratorConfig::validate() const {
    if (levels < 2) throw InputError("generator levels must be >= 2");
    if (levels > 9) throw InputError("generator levels must be <= 9 (1024x1024)");
    if (latent_dim < 1) throw InputError("latent_dim must be positive");
    if (mapping_layers < 1) throw InputError("mapping_layers must be positive");
    if (fmap_min < 1 || fmap_max < fmap_min) throw InputError("invalid feature-map bounds");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json{{"levels", c.levels},
                       {"latent_dim", c.latent_dim},
                       {"mapping_layers", c.mapping_layers},
                       {"fmap_base", c.fmap_base},
                       {"fmap_min", c.fmap_min},
                       {"fmap_max", c.fmap_max},
                       {"seed", c.seed},
                       {"noise_seed", c.noise_seed},
                       {"slots", c.slots()},
                       {"final_resolution", c.final_resolution()}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    j.at("levels").get_to(c.levels);
    j.at("latent_dim").get_to(c.latent_dim);
    j.at("mapping_layers").get_to(c.mapping_layers);
    j.at("fmap_base").get_to(c.fmap_base);
    j.at("fmap_min").get_to(c.fmap_min);
    j.at("fmap_max").get_to(c.fmap_max);
    j.at("seed").get_to(c.seed);
    j.at("noise_seed").get_to(c.noise_seed);
}

std::vector<float> map_latent(const Model& model, std::span<const float> z) {
    if (z.size() != static_cast<std::size_t>(model.config.latent_dim))
        throw InputError("latent has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(model.config.latent_dim));
    if (!std::all_of(z.begin(), z.end(), [](float v) { return std::isfinite(v); }))
        throw InputError("latent contains non-finite values");
    std::vector<float> w;
    model.map_forward(std::vector<float>(z.begin(), z.end()), w, nullptr);
    return w;
}

StyleCode broadcast(std::span<const float> w, int slots) {
    StyleCode code(slots, static_cast<int>(w.size()));
    for (int s = 0; s < slots; ++s) std::copy(w.begin(), w.end(), code.row(s).begin());
    return code;
}

Image synthesize(const Model& model, const StyleCode& code) {
    if (code.slots != model.config.slots() || code.dim != model.config.latent_dim)
        throw ContractError("style code is " + std::to_string(code.slots) + "x" + std::to_string(code.dim) +
                            ", model expects " + std::to_string(model.config.slots()) + "x" +
                            std::to_string(model.config.latent_dim));
    SynthesisCache<float> cache;
    model.synth_forward(code.values, model.pinned_noise, cache);
    return from_network_output(cache.out);
}

double discriminator_score(const Model& model, const Image& image) {
    const int res = model.config.final_resolution();
    if (image.width != res || image.height != res)
        throw ContractError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                            ", discriminator expects " + std::to_string(res));
    return model.disc_forward(to_network_input(image), nullptr);
}

std::vector<float> random_latent(const Model& model, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<float> z(model.config.latent_dim);
    for (auto& v : z) v = static_cast<float>(nd(rng));
    return z;
}

std::vector<float> mean_w(const Model& model, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> acc(model.config.latent_dim, 0.0);
    std::vector<float> w;
    for (int i = 0; i < samples; ++i) {
        model.map_forward(random_latent(model, rng), w, nullptr);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w[k];
    }
    std::vector<float> out(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / samples);
    return out;
}

nn::Tensor<float> to_network_input(const Image& img) {
    nn::Tensor<float> t(3, img.height, img.width);
    for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] = 2.0f * img.data[i] - 1.0f;
    return t;
}

Image from_network_output(const nn::Tensor<float>& t) {
    Image img(t.w, t.h);
    for (std::size_t i = 0; i < t.v.size(); ++i) img.data[i] = std::clamp(0.5f * (t.v[i] + 1.0f), 0.0f, 1.0f);
    return img;
}

}  // namespace ganspire::gan
