#include "ganspire/metrics.hpp"

#include <vector>

#include "ganspire/errors.hpp"

namespace ganspire::metrics {

namespace {

std::vector<perception::Embedding> embed_all(const perception::Backend& backend, std::span<const Image> images) {
    std::vector<perception::Embedding> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(backend.embed(img));
    return out;
}

}  // namespace

double similarity(const perception::Backend& backend, const perception::Embedding& input,
                  std::span<const perception::Embedding> examples) {
    if (examples.empty()) throw InputError("similarity of an empty example set is undefined");
    double acc = 0.0;
    for (const auto& e : examples) acc += perception::dist(backend, input, e);
    return 1.0 - acc / static_cast<double>(examples.size());
}

double similarity(const perception::Backend& backend, const Image& input, std::span<const Image> examples) {
    if (examples.empty()) throw InputError("similarity of an empty example set is undefined");
    for (const auto& e : examples)
        if (!e.same_shape(input)) throw ContractError("similarity: example resolution differs from the input");
    const auto emb = embed_all(backend, examples);
    return similarity(backend, backend.embed(input), emb);
}

double diversity(const perception::Backend& backend, std::span<const perception::Embedding> examples) {
    const std::size_t n = examples.size();
    if (n < 2) throw InputError("diversity needs at least 2 examples, got " + std::to_string(n));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) acc += perception::dist(backend, examples[i], examples[j]);
    return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double diversity(const perception::Backend& backend, std::span<const Image> examples) {
    if (examples.size() < 2) throw InputError("diversity needs at least 2 examples, got " + std::to_string(examples.size()));
    for (const auto& e : examples)
        if (!e.same_shape(examples[0])) throw ContractError("diversity: examples have mixed resolutions");
    const auto emb = embed_all(backend, examples);
    return diversity(backend, std::span<const perception::Embedding>(emb));
}

MetricReport evaluate_set(const perception::Backend& backend, const std::string& input_id, int condition,
                          const Image& input, std::span<const Image> examples) {
    MetricReport r;
    r.input_id = input_id;
    r.condition = condition;
    r.n = examples.size();
    r.backend_id = backend.id();
    r.similarity = similarity(backend, input, examples);
    if (examples.size() >= 2) r.diversity = diversity(backend, examples);
    return r;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = nlohmann::json{{"input_id", r.input_id},
                       {"condition", r.condition},
                       {"n", r.n},
                       {"similarity", r.similarity},
                       {"diversity", r.diversity ? nlohmann::json(*r.diversity) : nlohmann::json(nullptr)},
                       {"backend_id", r.backend_id}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
    j.at("input_id").get_to(r.input_id);
    j.at("condition").get_to(r.condition);
    j.at("n").get_to(r.n);
    j.at("similarity").get_to(r.similarity);
    r.diversity = j.at("diversity").is_null() ? std::nullopt : std::optional<double>(j.at("diversity").get<double>());
    j.at("backend_id").get_to(r.backend_id);
}

}  // namespace ganspire::metrics
