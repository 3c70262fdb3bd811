#pragma once

// Style merging: replace the source code's rows inside a contiguous slot
// range with the target's rows, for every one of the S(S+1)/2 ranges.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/encoder.hpp"
#include "ganspire/generator.hpp"

namespace ganspire::stylemerge {

struct SlotRange {
    int start = 0;
    int end = 0;  // inclusive
    bool operator==(const SlotRange&) const = default;
    auto operator<=>(const SlotRange&) const = default;
};

void to_json(nlohmann::json& j, const SlotRange& r);
void from_json(const nlohmann::json& j, SlotRange& r);

// Lexicographic by (start, end). Throws InputError for S < 1.
std::vector<SlotRange> enumerate_ranges(int S);

// Throws ContractError on mismatched shapes or a range outside [0, S).
gan::StyleCode merge_codes(const gan::StyleCode& source, const gan::StyleCode& target, SlotRange r);

// Coarse: range starts in the first third of the slots. Fine: range lies in
// the last third. Middle: everything else. Together they partition the
// ranges.
enum class Granularity { coarse, middle, fine, all };
Granularity classify(SlotRange r, int S);
std::string to_string(Granularity g);
Granularity parse_granularity(const std::string& s);  // throws InputError
bool matches(Granularity filter, SlotRange r, int S);

struct MergeItem {
    SlotRange range;
    Image image;
};

struct MergeBatch {
    std::string source_id;
    std::string target_id;
    std::vector<MergeItem> items;
};

// One image per range in `ranges` (all ranges when empty).
MergeBatch synthesize_pair(const gan::StyleCode& source, const gan::StyleCode& target, const gan::Model& model,
                           const std::string& source_id = "source", const std::string& target_id = "target",
                           const std::vector<SlotRange>& ranges = {});

enum class TargetMode { random_latent, corpus_image };
TargetMode parse_target_mode(const std::string& s);  // "random" | "corpus"

struct TargetSet {
    std::vector<gan::StyleCode> codes;
    std::vector<std::string> ids;              // corpus ids, or "z<i>" for random latents
    std::vector<std::size_t> corpus_indices;   // corpus_image mode only
};

struct CorpusView {
    std::span<const std::string> ids;
    std::span<const Image> images;
};

// Indices of k distinct corpus entries, seeded partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::uint64_t seed);

// random_latent: k codes broadcast(map_latent(z_i)), z_i from `seed`.
// corpus_image: encodes k distinct seeded-uniform corpus images.
// Throws InputError when k < 1 or the corpus is smaller than k.
TargetSet make_targets(TargetMode mode, int k, const gan::Model& model, std::uint64_t seed,
                       const CorpusView& corpus = {}, const perception::Backend* backend = nullptr,
                       const encoder::EncodeConfig& ecfg = {}, const std::vector<float>* cached_mean_w = nullptr);

}  // namespace ganspire::stylemerge
