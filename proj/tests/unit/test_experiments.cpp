#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ganspire/errors.hpp"
#include "ganspire/experiments.hpp"
#include "tiny_world.hpp"

using namespace ganspire;
using namespace ganspire::experiments;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ConditionReport fake_cell(int condition, const std::string& input, int labels, double sim, std::optional<double> div) {
    ConditionReport r;
    r.condition = condition;
    r.input_id = input;
    r.label_count = labels;
    r.complexity = complexity_group(labels);
    r.metrics.similarity = sim;
    r.metrics.diversity = div;
    r.metrics.n = div ? 2 : 1;
    return r;
}

}  // namespace

TEST(Complexity, Thresholds) {
    EXPECT_EQ(complexity_group(3), Complexity::low);
    EXPECT_EQ(complexity_group(5), Complexity::low);
    EXPECT_EQ(complexity_group(6), Complexity::medium);
    EXPECT_EQ(complexity_group(8), Complexity::medium);
    EXPECT_EQ(complexity_group(9), Complexity::high);
    EXPECT_EQ(to_string(Complexity::medium), "medium");
}

TEST(StratifiedSample, NineStrataOfThree) {
    std::vector<int> labels;
    for (int i = 0; i < 90; ++i) labels.push_back(3 + i % 9);
    const auto s = stratified_sample(labels, 3, 11, 3, 17);
    EXPECT_EQ(s.indices.size(), 27u);
    EXPECT_EQ(std::set<std::size_t>(s.indices.begin(), s.indices.end()).size(), 27u);
    ASSERT_EQ(s.strata.size(), 9u);
    for (const auto& [l, picks] : s.strata) {
        EXPECT_EQ(picks.size(), 3u);
        for (auto i : picks) EXPECT_EQ(labels[i], l);
    }
    EXPECT_EQ(stratified_sample(labels, 3, 11, 3, 17).indices, s.indices);
    EXPECT_NE(stratified_sample(labels, 3, 11, 3, 18).indices, s.indices);
}

TEST(StratifiedSample, DeficientStratumIsNamed) {
    std::vector<int> labels{3, 3, 3, 4, 4, 5, 5, 5};
    try {
        stratified_sample(labels, 3, 5, 3, 1);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("stratum 4"), std::string::npos) << e.what();
    }
    EXPECT_THROW(stratified_sample(labels, 5, 3, 1, 1), InputError);
}

TEST(NearestReal, MatchesFullSort) {
    const testutil::TinyWorld w;
    std::vector<perception::Embedding> emb;
    for (const auto& img : w.search.images) emb.push_back(w.backend->embed(img));
    for (std::size_t q = 0; q < 5; ++q) {
        const auto query = w.backend->embed(w.corpus.images[q]);
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < emb.size(); ++i) all.push_back({perception::dist(*w.backend, query, emb[i]), i});
        std::sort(all.begin(), all.end());
        const auto got = nearest_real(*w.backend, query, emb, 7);
        ASSERT_EQ(got.size(), 7u);
        for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(got[i], all[i].second);
        EXPECT_EQ(nearest_real(*w.backend, w.corpus.images[q], w.search.images, 7), got);
    }
    const auto q = w.backend->embed(w.corpus.images[0]);
    EXPECT_THROW(nearest_real(*w.backend, q, emb, 0), InputError);
    EXPECT_THROW(nearest_real(*w.backend, q, emb, emb.size() + 1), InputError);
}

TEST(ExperimentConfig, DefaultsValidationAndJson) {
    const ExperimentConfig d;
    EXPECT_EQ(d.k_targets, 5);
    EXPECT_EQ(d.random_examples, 25);
    EXPECT_EQ(d.nearest_examples, 25);
    EXPECT_DOUBLE_EQ(d.eps, 0.9);
    EXPECT_EQ(d.per_stratum * (d.label_max - d.label_min + 1), 27);
    auto c = testutil::tiny_experiment();
    c.mw_method = stats::MwMethod::asymptotic;
    c.conditions = {2, 5};
    const auto back = nlohmann::json(c).get<ExperimentConfig>();
    EXPECT_EQ(back.conditions, c.conditions);
    EXPECT_EQ(back.mw_method, stats::MwMethod::asymptotic);
    EXPECT_EQ(back.encode.max_iterations, 3);
    c.conditions = {7};
    EXPECT_THROW(c.validate(), InputError);
    c = testutil::tiny_experiment();
    c.eps = 0.0;
    EXPECT_THROW(c.validate(), InputError);
}

TEST(DeriveSeed, DependsOnTagIndexAndBaseSeed) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    const Context a(w.model, *w.backend, w.corpus, w.search, cfg);
    cfg.seed = 2;
    const Context b(w.model, *w.backend, w.corpus, w.search, cfg);
    EXPECT_EQ(a.derive_seed(1, 4), a.derive_seed(1, 4));
    EXPECT_NE(a.derive_seed(1, 4), a.derive_seed(2, 4));
    EXPECT_NE(a.derive_seed(1, 4), a.derive_seed(1, 5));
    EXPECT_NE(a.derive_seed(1, 4), b.derive_seed(1, 4));
}

TEST(Conditions, RandomAndNearestBaselines) {
    const testutil::TinyWorld w;
    const Context ctx(w.model, *w.backend, w.corpus, w.search, testutil::tiny_experiment());
    const auto c5 = run_condition(5, 4, ctx);
    ASSERT_EQ(c5.examples.size(), 25u);
    std::set<std::size_t> seen;
    for (const auto& e : c5.examples) {
        EXPECT_EQ(e.provenance, "real");
        seen.insert(*e.corpus_index);
        EXPECT_EQ(e.corpus_id, w.corpus.ids[*e.corpus_index]);
    }
    EXPECT_EQ(seen.size(), 25u);
    EXPECT_EQ(c5.metrics.n, 25u);

    const auto c6 = run_condition(6, 4, ctx);
    ASSERT_EQ(c6.examples.size(), 25u);
    const auto want = nearest_real(*w.backend, w.corpus.images[4], w.search.images, 25);
    for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(*c6.examples[i].corpus_index, want[i]);
    EXPECT_EQ(c6.label_count, w.corpus.label_counts[4]);
    EXPECT_EQ(c6.complexity, complexity_group(w.corpus.label_counts[4]));
}

TEST(Conditions, GeneratedMatchesStandaloneSelection) {
    const testutil::TinyWorld w;
    const auto cfg = testutil::tiny_experiment();
    const Context ctx(w.model, *w.backend, w.corpus, w.search, cfg);
    const std::size_t idx = 2;
    const auto c1 = run_condition(1, idx, ctx);

    const auto source = encoder::encode(w.corpus.images[idx], w.model, *w.backend, cfg.encode).code;
    EXPECT_EQ(source, ctx.corpus_code(idx));
    const auto targets = stylemerge::make_targets(stylemerge::TargetMode::random_latent, cfg.k_targets, w.model,
                                                  ctx.derive_seed(1, idx));
    std::vector<Image> pooled;
    for (const auto& t : targets.codes)
        for (auto& it : stylemerge::synthesize_pair(source, t, w.model).items) pooled.push_back(it.image);
    const auto sel = selection::select_from_images(pooled, w.model, *w.backend, cfg.eps, cfg.min_points);
    const int S = w.model.config.slots();
    EXPECT_EQ(c1.generated, static_cast<std::size_t>(cfg.k_targets * S * (S + 1) / 2));
    EXPECT_EQ(c1.cluster_count, static_cast<std::size_t>(sel.clustering.cluster_count));
    ASSERT_EQ(c1.examples.size(), sel.representatives.indices.size());
    for (std::size_t r = 0; r < c1.examples.size(); ++r) {
        EXPECT_EQ(c1.examples[r].image.data, pooled[sel.representatives.indices[r]].data);
        EXPECT_EQ(c1.examples[r].provenance, "generated");
        ASSERT_TRUE(c1.examples[r].range.has_value());
    }

    const auto c3 = run_condition(3, idx, ctx);
    ASSERT_EQ(c3.examples.size(), c1.examples.size());
    for (std::size_t r = 0; r < c3.examples.size(); ++r) {
        EXPECT_EQ(c3.examples[r].provenance, "real");
        EXPECT_EQ(*c3.examples[r].matched_from, r);
        EXPECT_EQ(*c3.examples[r].corpus_index,
                  nearest_real(*w.backend, c1.examples[r].image, w.search.images, 1).front());
    }
}

TEST(Conditions, PerTargetClustersEachBatch) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    cfg.per_target = true;
    cfg.eps = 1.0;  // every batch collapses to one cluster
    const Context ctx(w.model, *w.backend, w.corpus, w.search, cfg);
    const auto c1 = run_condition(1, 0, ctx);
    EXPECT_EQ(c1.cluster_count, static_cast<std::size_t>(cfg.k_targets));
    EXPECT_EQ(c1.examples.size(), static_cast<std::size_t>(cfg.k_targets));
    std::set<std::string> targets;
    for (const auto& e : c1.examples) targets.insert(e.target_id);
    EXPECT_EQ(targets.size(), static_cast<std::size_t>(cfg.k_targets));
}

TEST(Conditions, DedupeDropsRepeatedMatches) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    cfg.dedupe_real = true;
    const Context ctx(w.model, *w.backend, w.corpus, w.search, cfg);
    const auto c3 = run_condition(3, 1, ctx);
    const auto c1 = run_condition(1, 1, ctx);
    EXPECT_LE(c3.examples.size(), c1.examples.size());
    std::set<std::size_t> idx;
    for (const auto& e : c3.examples) EXPECT_TRUE(idx.insert(*e.corpus_index).second);
}

TEST(Conditions, ExternalInputMatchesCorpusInput) {
    const testutil::TinyWorld w;
    const Context ctx(w.model, *w.backend, w.corpus, w.search, testutil::tiny_experiment());
    for (int c : {1, 4, 5, 6}) {
        const auto a = run_condition(c, 3, ctx);
        const auto b = run_condition(c, "upload", w.corpus.images[3], 3, ctx);
        ASSERT_EQ(a.examples.size(), b.examples.size()) << c;
        for (std::size_t i = 0; i < a.examples.size(); ++i) EXPECT_EQ(a.examples[i].image.data, b.examples[i].image.data);
        EXPECT_DOUBLE_EQ(a.metrics.similarity, b.metrics.similarity);
    }
    std::mt19937_64 rng(1);
    EXPECT_THROW(run_condition(5, "big", testutil::random_image(rng, 32, 32), 0, ctx), ContractError);
}

TEST(Conditions, FailuresCarryConditionAndStage) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    cfg.k_targets = 40;  // more corpus targets than the corpus holds
    cfg.random_examples = 50;
    const Context ctx(w.model, *w.backend, w.corpus, w.search, cfg);
    try {
        run_condition(2, 0, ctx);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.condition(), 2);
        EXPECT_EQ(e.stage(), "generation");
    }
    try {
        run_condition(5, 0, ctx);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.condition(), 5);
        EXPECT_EQ(e.stage(), "sample");
    }
}

TEST(AggregateStats, GroupsAndNaHandling) {
    std::vector<ConditionReport> cells;
    const std::vector<std::pair<std::string, int>> inputs{{"a", 3}, {"b", 4}, {"c", 7}, {"d", 10}};
    for (int c = 1; c <= 3; ++c)
        for (std::size_t i = 0; i < inputs.size(); ++i)
            cells.push_back(fake_cell(c, inputs[i].first, inputs[i].second, 0.1 * c + 0.01 * i,
                                      c == 3 ? std::nullopt : std::optional<double>(0.2 * c + 0.03 * i)));
    const auto st = aggregate_stats(cells, 0.05, stats::MwMethod::automatic);
    ASSERT_EQ(st.size(), 4u);
    EXPECT_EQ(st[0].group, "all");
    EXPECT_EQ(st[1].group, "low");
    EXPECT_EQ(st[2].group, "medium");
    EXPECT_EQ(st[3].group, "high");
    EXPECT_EQ(st[0].inputs, 4u);
    EXPECT_EQ(st[1].inputs, 2u);
    EXPECT_EQ(st[0].similarity.conditions, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(st[0].diversity.conditions, (std::vector<int>{1, 2}));

    stats::Groups sim(3);
    for (const auto& c : cells) sim[c.condition - 1].push_back(c.metrics.similarity);
    const auto kw = stats::kruskal_wallis(sim);
    ASSERT_TRUE(st[0].similarity.kruskal_wallis.has_value());
    EXPECT_DOUBLE_EQ(st[0].similarity.kruskal_wallis->h, kw.h);
    EXPECT_EQ(st[0].similarity.pairwise->entries.size(), 3u);
    // one input per condition in "high": still two groups of one
    EXPECT_TRUE(st[3].similarity.kruskal_wallis.has_value());

    const std::vector<ConditionReport> single{fake_cell(1, "a", 3, 0.5, 0.5), fake_cell(1, "b", 3, 0.6, 0.4)};
    const auto one = aggregate_stats(single, 0.05, stats::MwMethod::automatic);
    EXPECT_FALSE(one[0].similarity.kruskal_wallis.has_value());
    EXPECT_FALSE(one[0].similarity.pairwise.has_value());
}

TEST(RunExperiment, DeterministicAcrossWorkerCounts) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    cfg.label_max = 5;
    cfg.random_examples = 10;
    cfg.nearest_examples = 10;
    const Context ctx1(w.model, *w.backend, w.corpus, w.search, cfg);
    const auto r1 = run_experiment(ctx1);
    EXPECT_TRUE(r1.failures.empty());
    ASSERT_EQ(r1.sample.indices.size(), 3u);
    ASSERT_EQ(r1.cells.size(), 18u);
    for (std::size_t i = 0; i < r1.cells.size(); ++i) EXPECT_EQ(r1.cells[i].condition, static_cast<int>(i % 6) + 1);

    cfg.workers = 3;
    const Context ctx3(w.model, *w.backend, w.corpus, w.search, cfg);
    const auto r3 = run_experiment(ctx3);
    EXPECT_EQ(aggregate_csv(r1), aggregate_csv(r3));
    EXPECT_EQ(stats_json(r1), stats_json(r3));

    const auto agg = aggregate_csv(r1);
    EXPECT_EQ(agg.substr(0, agg.find('\n')), "condition,input_id,label_count,complexity,n,similarity,diversity");
    EXPECT_EQ(count_lines(agg), 19u);
    std::size_t with_div = 0;
    for (const auto& c : r1.cells) with_div += c.metrics.diversity.has_value();
    EXPECT_EQ(count_lines(long_csv(r1)), 1 + 18 + with_div);
    EXPECT_EQ(stats_json(r1).at("unit"), "per-input metric value");

    const auto dir = testutil::temp_dir("experiment_report");
    write_report(r1, dir);
    for (const char* f : {"aggregate.csv", "long.csv", "stats.json", "failures.json", "sample.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    std::size_t cells = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "cells")) cells += e.is_regular_file();
    EXPECT_EQ(cells, 18u);
    std::ifstream in(dir / "aggregate.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), agg);
}

TEST(RunExperiment, FailedCellsAreReportedNotFatal) {
    const testutil::TinyWorld w;
    auto cfg = testutil::tiny_experiment();
    cfg.label_max = 4;
    cfg.random_examples = 50;  // c5 cannot draw 50 from 36
    cfg.nearest_examples = 10;
    cfg.conditions = {5, 6};
    const Context ctx(w.model, *w.backend, w.corpus, w.search, cfg);
    const auto r = run_experiment(ctx);
    EXPECT_EQ(r.cells.size(), 2u);
    ASSERT_EQ(r.failures.size(), 2u);
    for (const auto& f : r.failures) {
        EXPECT_EQ(f.condition, 5);
        EXPECT_EQ(f.stage, "sample");
    }
}
