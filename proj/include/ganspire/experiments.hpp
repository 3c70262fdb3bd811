#pragma once

// Six-condition evaluation harness.
//
//   c1  encode input, merge with k random-latent targets, select representatives
//   c2  same, targets are encoded corpus images
//   c3  c1's representatives replaced by their nearest real screenshot
//   c4  same from c2
//   c5  25 seeded-random corpus images
//   c6  the 25 search-corpus images nearest to the input
//
// Statistics are computed over per-input metric values within each condition.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/dataset.hpp"
#include "ganspire/encoder.hpp"
#include "ganspire/generator.hpp"
#include "ganspire/metrics.hpp"
#include "ganspire/perception.hpp"
#include "ganspire/selection.hpp"
#include "ganspire/stats.hpp"
#include "ganspire/stylemerge.hpp"

namespace ganspire::experiments {

// A stage failure inside one condition run.
class StageError : public std::runtime_error {
public:
    StageError(int condition, std::string stage, const std::string& what)
        : std::runtime_error("condition " + std::to_string(condition) + ", " + stage + ": " + what),
          condition_(condition), stage_(std::move(stage)), message_(what) {}
    int condition() const noexcept { return condition_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& message() const noexcept { return message_; }

private:
    int condition_;
    std::string stage_;
    std::string message_;
};

enum class Complexity { low, medium, high };
// < 6 low, 6..8 medium, > 8 high.
Complexity complexity_group(int label_count);
std::string to_string(Complexity c);

// Images at model resolution with their ids and unique-label counts.
struct Corpus {
    std::vector<std::string> ids;
    std::vector<Image> images;
    std::vector<int> label_counts;
    std::size_t size() const { return images.size(); }
    stylemerge::CorpusView view() const { return {ids, images}; }
};

Corpus load_experiment_corpus(const std::filesystem::path& dir);

struct InputSample {
    std::vector<std::size_t> indices;                  // into the corpus, stratum by stratum
    std::map<int, std::vector<std::size_t>> strata;    // label count -> picked indices
};

// per_stratum picks without replacement from every label count in
// [lo, hi], each stratum's members taken in corpus order. Throws InputError
// naming the first stratum with too few members.
InputSample stratified_sample(std::span<const int> label_counts, int lo, int hi, int per_stratum,
                              std::uint64_t seed);

// The k corpus entries nearest to the query, ascending by distance, ties by
// index. Throws InputError when k is outside [1, corpus size].
std::vector<std::size_t> nearest_real(const perception::Backend& backend, const perception::Embedding& query,
                                      std::span<const perception::Embedding> corpus, std::size_t k);
std::vector<std::size_t> nearest_real(const perception::Backend& backend, const Image& query,
                                      std::span<const Image> corpus, std::size_t k);

struct ExperimentConfig {
    int label_min = 3;
    int label_max = 11;
    int per_stratum = 3;
    int k_targets = 5;
    int random_examples = 25;
    int nearest_examples = 25;
    double eps = selection::kDefaultEps;
    int min_points = 1;
    bool per_target = false;   // cluster each target's batch separately instead of pooling
    bool dedupe_real = false;  // c3/c4: drop repeated nearest matches
    std::vector<int> conditions{1, 2, 3, 4, 5, 6};
    int workers = 1;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    stats::MwMethod mw_method = stats::MwMethod::automatic;
    encoder::EncodeConfig encode{};
    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct Example {
    std::string provenance;  // "generated" | "real"
    Image image;
    // generated
    std::string target_id;
    std::optional<stylemerge::SlotRange> range;
    double score = 0.0;  // discriminator score
    // real
    std::string corpus_id;
    std::optional<std::size_t> corpus_index;
    std::optional<std::size_t> matched_from;  // c3/c4: generated representative it replaces
};

// Synthesis + representative selection for one source code.
struct GenerationParams {
    stylemerge::TargetMode mode = stylemerge::TargetMode::random_latent;
    int k = 5;
    std::uint64_t seed = 1;
    double eps = selection::kDefaultEps;
    int min_points = 1;
    bool per_target = false;
    stylemerge::Granularity granularity = stylemerge::Granularity::all;
};

struct Generation {
    std::vector<std::string> target_ids;
    std::size_t generated = 0;     // images synthesized before selection
    std::size_t cluster_count = 0; // summed over batches when per_target
    std::vector<Example> representatives;
};

class Context;

struct ConditionReport {
    int condition = 0;
    std::string input_id;
    std::size_t input_index = 0;  // corpus index, or the seed index of an external input
    int label_count = 0;
    Complexity complexity = Complexity::low;
    std::vector<Example> examples;
    metrics::MetricReport metrics;
    std::size_t generated = 0;      // c1-c4: synthesized images
    std::size_t cluster_count = 0;  // c1-c4: clusters found by selection
};

nlohmann::json to_json(const ConditionReport& r);

// Shared, read-only state for condition runs plus memoised intermediate
// results (encoded corpus codes, c1/c2 generations, embeddings). Safe to
// use from several threads.
class Context {
public:
    Context(const gan::Model& model, const perception::Backend& backend, const Corpus& corpus,
            const Corpus& search, ExperimentConfig cfg);

    const gan::Model& model() const { return model_; }
    const perception::Backend& backend() const { return backend_; }
    const Corpus& corpus() const { return corpus_; }
    const Corpus& search() const { return search_; }
    const ExperimentConfig& config() const { return cfg_; }

    const std::vector<float>& mean_w() const;
    const std::vector<perception::Embedding>& search_embeddings() const;
    // Encoded code of corpus[i], computed once.
    const gan::StyleCode& corpus_code(std::size_t i) const;
    gan::StyleCode encode_image(const Image& img) const;

    Generation generate(const gan::StyleCode& source, const GenerationParams& params) const;
    // c1 / c2 stage (targets, synthesis, selection) for an encoded source.
    Generation generation_for(int condition, const gan::StyleCode& source, std::uint64_t seed_index) const;
    // Same for a corpus input, computed once and reused by c3 / c4.
    const Generation& condition_generation(int condition, std::size_t input_index) const;
    // Replace each generated example by its nearest search-corpus image.
    std::vector<Example> to_real(std::span<const Example> generated, bool dedupe) const;

    // Seed for (tag, index), independent of execution order.
    std::uint64_t derive_seed(std::uint64_t tag, std::uint64_t index) const;

private:
    template <class K, class V>
    struct Memo {
        std::mutex mu;
        std::map<K, std::shared_future<V>> slots;
        const V& get(const K& key, const std::function<V()>& make);
    };

    const gan::Model& model_;
    const perception::Backend& backend_;
    const Corpus& corpus_;
    const Corpus& search_;
    ExperimentConfig cfg_;

    mutable Memo<int, std::vector<float>> mean_w_;
    mutable Memo<int, std::vector<perception::Embedding>> search_emb_;
    mutable Memo<std::size_t, gan::StyleCode> codes_;
    mutable Memo<std::pair<int, std::size_t>, Generation> generations_;
};

// Throws StageError tagged with the condition and the failing stage.
ConditionReport run_condition(int condition, std::size_t input_index, const Context& ctx);
// An image outside the corpus. Seeds derive from `seed_index` the way corpus
// inputs derive them from their index.
ConditionReport run_condition(int condition, const std::string& input_id, const Image& input,
                              std::uint64_t seed_index, const Context& ctx, int label_count = 0);

struct CellFailure {
    std::string input_id;
    int condition = 0;
    std::string stage;
    std::string message;
};

struct MetricStats {
    std::vector<int> conditions;  // groups that had at least one value, ascending
    std::vector<std::size_t> counts;
    std::optional<stats::KruskalResult> kruskal_wallis;  // absent with fewer than 2 groups
    std::optional<stats::PairwiseTable> pairwise;
};

struct GroupStats {
    std::string group;  // "all", "low", "medium", "high"
    std::size_t inputs = 0;
    MetricStats similarity;
    MetricStats diversity;
};

struct ExperimentReport {
    InputSample sample;
    std::vector<ConditionReport> cells;  // input-major, then condition
    std::vector<CellFailure> failures;
    std::vector<GroupStats> stats;       // "all" first, then complexity groups present
};

// Reduce completed cells into per-condition statistics. Diversity values
// absent (n < 2) are left out of their group.
std::vector<GroupStats> aggregate_stats(std::span<const ConditionReport> cells, double alpha,
                                        stats::MwMethod method);

ExperimentReport run_experiment(const Context& ctx);

std::string aggregate_csv(const ExperimentReport& r);
std::string long_csv(const ExperimentReport& r);
nlohmann::json stats_json(const ExperimentReport& r);

// cells/<input>_c<k>.json, aggregate.csv, long.csv, stats.json, failures.json, sample.json.
void write_report(const ExperimentReport& r, const std::filesystem::path& dir);

}  // namespace ganspire::experiments
