#pragma once

// Fixed-resolution GAN training: non-saturating logistic loss, R1 penalty on
// reals, Adam(beta1 = 0, beta2 = 0.99), one discriminator step per generator
// step, style-mixing regularisation, FID-based early stopping. No mirror
// augmentation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/checkpoint.hpp"
#include "ganspire/image.hpp"

namespace ganspire::gan {

// 0.0015 up to 128, 0.002 for 256 and 512, 0.003 for 1024.
double learning_rate_for_resolution(int resolution);

// Stops once `patience` consecutive evaluations each exceed the evaluation
// before them.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience = 3) : patience_(patience) {}
    // Returns true when training should stop after this evaluation.
    bool push(double value);
    bool stopped() const { return stopped_; }
    std::size_t best_index() const { return best_index_; }
    double best_value() const { return best_; }
    std::size_t size() const { return count_; }

private:
    int patience_;
    int rising_ = 0;
    std::size_t count_ = 0;
    std::size_t best_index_ = 0;
    double best_ = 0.0;
    double last_ = 0.0;
    bool stopped_ = false;
};

struct TrainConfig {
    int max_steps = 500;
    int batch = 8;
    double learning_rate = 0.0;  // 0 selects the resolution schedule
    double beta1 = 0.0;
    double beta2 = 0.99;
    double adam_eps = 1e-8;
    double r1_gamma = 10.0;
    double r1_fd_eps = 1e-2;  // finite-difference step for the R1 gradient
    int hyper_interval = 4;   // minibatches between schedule / optimizer-state refreshes
    int fid_interval = 50;
    int fid_samples = 64;
    int patience = 3;
    double mixing_prob = 0.9;  // style-mixing regularisation
    std::uint64_t seed = 11;
    // Injected FID values replace the measured ones (used to exercise the
    // stopping rule in isolation).
    std::vector<double> injected_fid;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct StepLog {
    std::int64_t step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double r1 = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    Checkpoint best;  // parameters at the best FID evaluation
    std::vector<StepLog> log;
    std::vector<FidRecord> fid_history;
    std::int64_t steps_run = 0;
    bool early_stopped = false;
};

using ProgressFn = std::function<void(const StepLog&, std::optional<double> fid)>;

// Throws InputError for an empty or resolution-mismatched corpus and
// DivergenceError when a loss becomes non-finite.
TrainResult train(std::span<const Image> corpus, const GeneratorConfig& gcfg, const TrainConfig& tcfg,
                  const ProgressFn& progress = {});

}  // namespace ganspire::gan
