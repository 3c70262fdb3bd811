#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "ganspire/errors.hpp"
#include "ganspire/stylemerge.hpp"
#include "test_util.hpp"

using namespace ganspire;
using namespace ganspire::stylemerge;

namespace {

gan::StyleCode filled(int S, int d, float base) {
    gan::StyleCode c(S, d);
    for (int s = 0; s < S; ++s)
        for (int j = 0; j < d; ++j) c.row(s)[j] = base + s + 0.01f * j;
    return c;
}

gan::StyleCode random_code(const gan::Model& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gan::broadcast(gan::map_latent(m, gan::random_latent(m, rng)), m.config.slots());
}

}  // namespace

TEST(EnumerateRanges, CountIsTriangular) {
    for (int S = 1; S <= 32; ++S) EXPECT_EQ(enumerate_ranges(S).size(), static_cast<std::size_t>(S * (S + 1) / 2)) << S;
    EXPECT_EQ(enumerate_ranges(16).size(), 136u);
    EXPECT_EQ(enumerate_ranges(8).size(), 36u);
    EXPECT_THROW(enumerate_ranges(0), InputError);
}

TEST(EnumerateRanges, MatchesBruteForceForFourSlots) {
    std::vector<SlotRange> brute;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if (a <= b) brute.push_back({a, b});
    EXPECT_EQ(enumerate_ranges(4), brute);
}

TEST(EnumerateRanges, DistinctSortedAndCoverage) {
    for (int S : {1, 5, 8, 13}) {
        const auto rs = enumerate_ranges(S);
        EXPECT_TRUE(std::is_sorted(rs.begin(), rs.end()));
        EXPECT_EQ(std::set<SlotRange>(rs.begin(), rs.end()).size(), rs.size());
        for (int t = 0; t < S; ++t) {
            const auto cover = std::count_if(rs.begin(), rs.end(), [&](SlotRange r) { return r.start <= t && t <= r.end; });
            EXPECT_EQ(cover, (t + 1) * (S - t)) << "S=" << S << " t=" << t;
        }
    }
}

TEST(MergeCodes, RowsInsideFromTargetOutsideFromSource) {
    const int S = 8, d = 5;
    const auto src = filled(S, d, 0.0f), tgt = filled(S, d, 100.0f);
    for (const auto r : enumerate_ranges(S)) {
        const auto m = merge_codes(src, tgt, r);
        for (int s = 0; s < S; ++s) {
            const auto& want = (r.start <= s && s <= r.end) ? tgt : src;
            EXPECT_TRUE(std::equal(m.row(s).begin(), m.row(s).end(), want.row(s).begin())) << s;
        }
        EXPECT_EQ(merge_codes(m, tgt, r), m);  // idempotent
    }
    EXPECT_EQ(merge_codes(src, tgt, {0, S - 1}), tgt);
    EXPECT_EQ(merge_codes(src, src, {2, 4}), src);
}

TEST(MergeCodes, ShapeAndRangeContracts) {
    const auto a = filled(8, 5, 0.0f);
    EXPECT_THROW(merge_codes(a, filled(8, 4, 0.0f), {0, 1}), ContractError);
    EXPECT_THROW(merge_codes(a, filled(6, 5, 0.0f), {0, 1}), ContractError);
    EXPECT_THROW(merge_codes(a, a, {3, 2}), ContractError);
    EXPECT_THROW(merge_codes(a, a, {-1, 2}), ContractError);
    EXPECT_THROW(merge_codes(a, a, {0, 8}), ContractError);
}

TEST(Granularity, PartitionsEveryRange) {
    for (int S = 1; S <= 16; ++S) {
        std::map<Granularity, int> counts;
        for (const auto r : enumerate_ranges(S)) {
            const auto g = classify(r, S);
            ++counts[g];
            EXPECT_TRUE(matches(Granularity::all, r, S));
            int hits = 0;
            for (auto f : {Granularity::coarse, Granularity::middle, Granularity::fine}) hits += matches(f, r, S);
            EXPECT_EQ(hits, 1);
            if (g == Granularity::coarse) EXPECT_LT(3 * r.start, S);
            if (g == Granularity::fine) EXPECT_GE(3 * r.start, 2 * S);
        }
        EXPECT_EQ(counts[Granularity::coarse] + counts[Granularity::middle] + counts[Granularity::fine], S * (S + 1) / 2);
    }
    EXPECT_EQ(classify({0, 7}, 8), Granularity::coarse);
    EXPECT_EQ(classify({6, 7}, 8), Granularity::fine);
    EXPECT_EQ(classify({4, 4}, 8), Granularity::middle);
    for (auto g : {Granularity::coarse, Granularity::middle, Granularity::fine, Granularity::all})
        EXPECT_EQ(parse_granularity(to_string(g)), g);
    EXPECT_THROW(parse_granularity("medium"), InputError);
}

TEST(SynthesizePair, OneImagePerRangeAndIdentityCases) {
    const gan::Model model(testutil::tiny_config());
    const int S = model.config.slots();
    const auto src = random_code(model, 1), tgt = random_code(model, 2);
    const auto batch = synthesize_pair(src, tgt, model, "s", "t");
    ASSERT_EQ(batch.items.size(), static_cast<std::size_t>(S * (S + 1) / 2));
    EXPECT_EQ(batch.source_id, "s");
    EXPECT_EQ(batch.target_id, "t");
    const auto full = gan::synthesize(model, tgt);
    for (const auto& it : batch.items)
        if (it.range == SlotRange{0, S - 1}) EXPECT_EQ(it.image.data, full.data);

    const auto same = synthesize_pair(src, src, model);
    const auto ref = gan::synthesize(model, src);
    for (const auto& it : same.items) EXPECT_EQ(it.image.data, ref.data);

    const auto some = synthesize_pair(src, tgt, model, "s", "t", {{1, 2}, {0, 0}});
    ASSERT_EQ(some.items.size(), 2u);
    EXPECT_EQ(some.items[0].range, (SlotRange{1, 2}));
    EXPECT_EQ(some.items[0].image.data, gan::synthesize(model, merge_codes(src, tgt, {1, 2})).data);
}

TEST(SampleWithoutReplacement, DistinctDeterministicAndRoughlyUniform) {
    const auto a = sample_without_replacement(30, 10, 7);
    EXPECT_EQ(a, sample_without_replacement(30, 10, 7));
    EXPECT_NE(a, sample_without_replacement(30, 10, 8));
    EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 10u);
    for (auto i : a) EXPECT_LT(i, 30u);
    EXPECT_THROW(sample_without_replacement(3, 4, 1), InputError);
    EXPECT_EQ(sample_without_replacement(5, 5, 1).size(), 5u);

    // each index is picked with probability k/n
    std::vector<int> hits(20, 0);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t)
        for (auto i : sample_without_replacement(20, 5, 1000 + t)) ++hits[i];
    for (int h : hits) EXPECT_NEAR(h / double(trials), 0.25, 0.04);
}

TEST(MakeTargets, RandomLatentIsSeededMapping) {
    const gan::Model model(testutil::tiny_config());
    const auto ts = make_targets(TargetMode::random_latent, 3, model, 21);
    ASSERT_EQ(ts.codes.size(), 3u);
    EXPECT_EQ(ts.ids, (std::vector<std::string>{"z0", "z1", "z2"}));
    std::mt19937_64 rng(21);
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(ts.codes[i], gan::broadcast(gan::map_latent(model, gan::random_latent(model, rng)), model.config.slots()));
    EXPECT_THROW(make_targets(TargetMode::random_latent, 0, model, 1), InputError);
}

TEST(MakeTargets, CorpusModeEncodesSampledImages) {
    const gan::Model model(testutil::tiny_config());
    const auto backend = perception::make_backend();
    std::mt19937_64 rng(4);
    std::vector<Image> imgs;
    std::vector<std::string> ids;
    for (int i = 0; i < 6; ++i) {
        imgs.push_back(testutil::blocky_image(rng, 16, 16));
        ids.push_back("img" + std::to_string(i));
    }
    encoder::EncodeConfig ec;
    ec.max_iterations = 2;
    ec.mean_w_samples = 32;
    const CorpusView view{ids, imgs};
    const auto ts = make_targets(TargetMode::corpus_image, 2, model, 5, view, backend.get(), ec);
    EXPECT_EQ(ts.corpus_indices, sample_without_replacement(6, 2, 5));
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(ts.ids[i], ids[ts.corpus_indices[i]]);
        EXPECT_EQ(ts.codes[i], encoder::encode(imgs[ts.corpus_indices[i]], model, *backend, ec).code);
    }
    EXPECT_THROW(make_targets(TargetMode::corpus_image, 7, model, 5, view, backend.get(), ec), InputError);
    EXPECT_THROW(make_targets(TargetMode::corpus_image, 2, model, 5, view, nullptr, ec), InputError);
    EXPECT_EQ(parse_target_mode("random"), TargetMode::random_latent);
    EXPECT_EQ(parse_target_mode("corpus"), TargetMode::corpus_image);
    EXPECT_THROW(parse_target_mode("latent"), InputError);
}
