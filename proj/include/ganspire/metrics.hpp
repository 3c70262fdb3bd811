#pragma once

// Sim(D, O) = 1 - mean_i dist(D, E_i)
// Div(O)    = 2 / (n (n - 1)) * sum_{i<j} dist(E_i, E_j)

#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "ganspire/perception.hpp"

namespace ganspire::metrics {

// Throws InputError on an empty set.
double similarity(const perception::Backend& backend, const Image& input, std::span<const Image> examples);
double similarity(const perception::Backend& backend, const perception::Embedding& input,
                  std::span<const perception::Embedding> examples);

// Throws InputError when fewer than two examples are given.
double diversity(const perception::Backend& backend, std::span<const Image> examples);
double diversity(const perception::Backend& backend, std::span<const perception::Embedding> examples);

struct MetricReport {
    std::string input_id;
    int condition = 0;
    std::size_t n = 0;
    double similarity = 0.0;
    std::optional<double> diversity;  // absent when n < 2
    std::string backend_id;
};

MetricReport evaluate_set(const perception::Backend& backend, const std::string& input_id, int condition,
                          const Image& input, std::span<const Image> examples);

void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);

}  // namespace ganspire::metrics
