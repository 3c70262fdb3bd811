#pragma once

// Untrained 16 x 16 model with small synthetic corpora, for pipeline tests
// that need plumbing rather than a trained generator.

#include <random>

#include "ganspire/experiments.hpp"
#include "test_util.hpp"

namespace testutil {

inline ganspire::experiments::Corpus tiny_corpus(int n, std::uint64_t seed, const std::string& prefix) {
    std::mt19937_64 rng(seed);
    ganspire::experiments::Corpus c;
    for (int i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "%s%03d", prefix.c_str(), i);
        c.ids.push_back(id);
        c.images.push_back(blocky_image(rng, 16, 16));
        c.label_counts.push_back(3 + i % 9);
    }
    return c;
}

inline ganspire::experiments::ExperimentConfig tiny_experiment() {
    ganspire::experiments::ExperimentConfig c;
    c.label_min = 3;
    c.label_max = 11;
    c.per_stratum = 1;
    c.k_targets = 3;
    c.eps = 0.3;
    c.encode.max_iterations = 3;
    c.encode.mean_w_samples = 64;
    return c;
}

struct TinyWorld {
    ganspire::gan::Model model{tiny_config()};
    std::unique_ptr<ganspire::perception::Backend> backend = ganspire::perception::make_backend();
    ganspire::experiments::Corpus corpus = tiny_corpus(36, 1, "c");
    ganspire::experiments::Corpus search = tiny_corpus(30, 2, "s");
};

}  // namespace testutil
