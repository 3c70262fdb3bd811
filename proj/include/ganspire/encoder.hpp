#pragma once

// Latent code search: recover a StyleCode (all S rows free) whose synthesis
// matches a target image under the perceptual loss, by plain gradient descent
// with a fixed step size.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/generator.hpp"
#include "ganspire/perception.hpp"

namespace ganspire::encoder {

struct EncodeConfig {
    int max_iterations = 500;
    double step_size = 2.0;
    std::string init_mode = "mean_w";  // "mean_w" | "seeded_random"
    double loss_floor = 0.0;           // stop once the loss is at or below this
    std::uint64_t seed = 1;
    int mean_w_samples = 10000;
    double pixel_weight = 0.0;  // optional mean-squared pixel term, off by default

    void validate() const;
};

void to_json(nlohmann::json& j, const EncodeConfig& c);
void from_json(const nlohmann::json& j, EncodeConfig& c);

struct EncodeResult {
    gan::StyleCode code;             // best code seen
    std::vector<double> loss_trace;  // best-so-far loss; [0] is the initialisation
    std::vector<double> iterate_trace;  // loss of each iterate, same length
    double final_loss = 0.0;         // == loss_trace.back() == min(iterate_trace)
    int best_iteration = 0;
};

// Loss of a code and its gradient (S x d, may be null). Templated so the
// gradient can be checked in double precision.
template <class T, class Core>
double code_loss_and_gradient(const gan::ModelT<T>& model, const Core& core, double calibration_max,
                              const perception::EmbeddingT<T>& target, const std::vector<T>& code,
                              std::vector<T>* dcode);

// Starting code for the given config. `cached_mean_w` (optional) avoids
// recomputing the 10k-sample mean for repeated encodes.
gan::StyleCode initial_code(const gan::Model& model, const EncodeConfig& cfg,
                            const std::vector<float>* cached_mean_w = nullptr);

// Throws ContractError on a resolution mismatch and DivergenceError (with the
// trace so far in the message) on a non-finite loss.
EncodeResult encode(const Image& target, const gan::Model& model, const perception::Backend& backend,
                    const EncodeConfig& cfg, const std::vector<float>* cached_mean_w = nullptr);

// S x d float32 little-endian array plus <path>.json {slots, dim, final_loss}.
void save_code(const std::filesystem::path& path, const gan::StyleCode& code, double final_loss);
gan::StyleCode load_code(const std::filesystem::path& path);

}  // namespace ganspire::encoder

#include "ganspire/encoder_impl.hpp"
