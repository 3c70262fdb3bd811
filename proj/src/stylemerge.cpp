#include "ganspire/stylemerge.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ganspire/errors.hpp"

namespace ganspire::stylemerge {

void to_json(nlohmann::json& j, const SlotRange& r) { j = nlohmann::json{{"start", r.start}, {"end", r.end}}; }
void from_json(const nlohmann::json& j, SlotRange& r) {
    j.at("start").get_to(r.start);
    j.at("end").get_to(r.end);
}

std::vector<SlotRange> enumerate_ranges(int S) {
    if (S < 1) throw InputError("slot count must be >= 1, got " + std::to_string(S));
    std::vector<SlotRange> out;
    out.reserve(static_cast<std::size_t>(S) * (S + 1) / 2);
    for (int i = 0; i < S; ++i)
        for (int j = i; j < S; ++j) out.push_back({i, j});
    return out;
}

gan::StyleCode merge_codes(const gan::StyleCode& source, const gan::StyleCode& target, SlotRange r) {
    if (source.slots != target.slots || source.dim != target.dim)
        throw ContractError("merge_codes: source is " + std::to_string(source.slots) + "x" + std::to_string(source.dim) +
                            ", target is " + std::to_string(target.slots) + "x" + std::to_string(target.dim));
    if (r.start < 0 || r.start > r.end || r.end >= source.slots)
        throw ContractError("merge_codes: range (" + std::to_string(r.start) + ", " + std::to_string(r.end) +
                            ") is invalid for " + std::to_string(source.slots) + " slots");
    gan::StyleCode out = source;
    for (int s = r.start; s <= r.end; ++s) std::copy(target.row(s).begin(), target.row(s).end(), out.row(s).begin());
    return out;
}

Granularity classify(SlotRange r, int S) {
    if (3 * r.start < S) return Granularity::coarse;
    if (3 * r.start >= 2 * S) return Granularity::fine;
    return Granularity::middle;
}

std::string to_string(Granularity g) {
    switch (g) {
        case Granularity::coarse: return "coarse";
        case Granularity::middle: return "middle";
        case Granularity::fine: return "fine";
        case Granularity::all: return "all";
    }
    return "all";
}

Granularity parse_granularity(const std::string& s) {
    if (s == "coarse") return Granularity::coarse;
    if (s == "middle") return Granularity::middle;
    if (s == "fine") return Granularity::fine;
    if (s == "all") return Granularity::all;
    throw InputError("unknown granularity '" + s + "' (expected coarse, middle, fine or all)");
}

bool matches(Granularity filter, SlotRange r, int S) { return filter == Granularity::all || classify(r, S) == filter; }

MergeBatch synthesize_pair(const gan::StyleCode& source, const gan::StyleCode& target, const gan::Model& model,
                           const std::string& source_id, const std::string& target_id,
                           const std::vector<SlotRange>& ranges) {
    MergeBatch batch;
    batch.source_id = source_id;
    batch.target_id = target_id;
    const auto all = ranges.empty() ? enumerate_ranges(source.slots) : ranges;
    batch.items.reserve(all.size());
    for (const auto& r : all) {
        try {
            batch.items.push_back({r, gan::synthesize(model, merge_codes(source, target, r))});
        } catch (const ContractError& e) {
            throw ContractError("range (" + std::to_string(r.start) + ", " + std::to_string(r.end) + "): " + e.what());
        }
    }
    return batch;
}

TargetMode parse_target_mode(const std::string& s) {
    if (s == "random" || s == "random_latent") return TargetMode::random_latent;
    if (s == "corpus" || s == "corpus_image") return TargetMode::corpus_image;
    throw InputError("unknown targets mode '" + s + "' (expected random or corpus)");
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k > n) throw InputError("cannot sample " + std::to_string(k) + " items from " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, n - 1);
        std::swap(idx[i], idx[d(rng)]);
    }
    idx.resize(k);
    return idx;
}

TargetSet make_targets(TargetMode mode, int k, const gan::Model& model, std::uint64_t seed, const CorpusView& corpus,
                       const perception::Backend* backend, const encoder::EncodeConfig& ecfg,
                       const std::vector<float>* cached_mean_w) {
    if (k < 1) throw InputError("k must be >= 1");
    TargetSet out;
    const int S = model.config.slots();
    if (mode == TargetMode::random_latent) {
        std::mt19937_64 rng(seed);
        for (int i = 0; i < k; ++i) {
            out.codes.push_back(gan::broadcast(gan::map_latent(model, gan::random_latent(model, rng)), S));
            out.ids.push_back("z" + std::to_string(i));
        }
        return out;
    }
    if (corpus.images.size() < static_cast<std::size_t>(k))
        throw InputError("corpus has " + std::to_string(corpus.images.size()) + " images, need " + std::to_string(k));
    if (backend == nullptr) throw InputError("corpus targets need a perception backend for encoding");
    out.corpus_indices = sample_without_replacement(corpus.images.size(), static_cast<std::size_t>(k), seed);
    for (std::size_t idx : out.corpus_indices) {
        out.codes.push_back(encoder::encode(corpus.images[idx], model, *backend, ecfg, cached_mean_w).code);
        out.ids.push_back(idx < corpus.ids.size() ? corpus.ids[idx] : std::to_string(idx));
    }
    return out;
}

}  // namespace ganspire::stylemerge
