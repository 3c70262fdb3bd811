#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ganspire/errors.hpp"
#include "ganspire/training.hpp"
#include "test_util.hpp"

using namespace ganspire;
using namespace ganspire::gan;

namespace {

std::vector<Image> tiny_corpus(int n = 8, int res = 16, std::uint64_t seed = 5) {
    std::mt19937_64 rng(seed);
    std::vector<Image> out;
    for (int i = 0; i < n; ++i) out.push_back(testutil::blocky_image(rng, res, res));
    return out;
}

TrainConfig fast_config(int steps) {
    TrainConfig t;
    t.max_steps = steps;
    t.batch = 2;
    t.fid_interval = 5;
    t.fid_samples = 8;
    return t;
}

}  // namespace

TEST(LearningRate, ResolutionSchedule) {
    EXPECT_DOUBLE_EQ(learning_rate_for_resolution(32), 0.0015);
    EXPECT_DOUBLE_EQ(learning_rate_for_resolution(128), 0.0015);
    EXPECT_DOUBLE_EQ(learning_rate_for_resolution(256), 0.002);
    EXPECT_DOUBLE_EQ(learning_rate_for_resolution(512), 0.002);
    EXPECT_DOUBLE_EQ(learning_rate_for_resolution(1024), 0.003);
}

TEST(EarlyStopper, StopsAfterThreeRisesAndKeepsBest) {
    EarlyStopper s(3);
    const std::vector<double> seq{50, 49, 50, 51, 52};
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const bool stop = s.push(seq[i]);
        EXPECT_EQ(stop, i == seq.size() - 1) << i;
    }
    EXPECT_TRUE(s.stopped());
    EXPECT_EQ(s.best_index(), 1u);
    EXPECT_DOUBLE_EQ(s.best_value(), 49.0);
}

TEST(EarlyStopper, MonotoneDecreaseNeverStops) {
    EarlyStopper s(3);
    for (int i = 0; i < 200; ++i) EXPECT_FALSE(s.push(1000.0 - i));
    EXPECT_EQ(s.best_index(), 199u);
}

TEST(EarlyStopper, PlateauResetsTheRun) {
    EarlyStopper s(3);
    for (double v : {10.0, 11.0, 12.0, 12.0, 13.0, 14.0}) EXPECT_FALSE(s.push(v));
    EXPECT_TRUE(s.push(15.0));
}

TEST(TrainConfig, JsonRoundTrip) {
    TrainConfig c = fast_config(17);
    c.r1_gamma = 3.5;
    c.seed = 99;
    nlohmann::json j = c;
    const auto back = j.get<TrainConfig>();
    EXPECT_EQ(back.max_steps, 17);
    EXPECT_EQ(back.batch, 2);
    EXPECT_DOUBLE_EQ(back.r1_gamma, 3.5);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_DOUBLE_EQ(back.beta1, 0.0);
    EXPECT_DOUBLE_EQ(back.beta2, 0.99);
}

TEST(Train, InjectedFidStopsAndKeepsBestCheckpoint) {
    auto tc = fast_config(100);
    tc.fid_interval = 1;
    tc.injected_fid = {50, 49, 50, 51, 52};
    const auto r = train(tiny_corpus(), testutil::tiny_config(), tc);
    EXPECT_TRUE(r.early_stopped);
    EXPECT_EQ(r.steps_run, 5);
    ASSERT_EQ(r.fid_history.size(), 5u);
    EXPECT_DOUBLE_EQ(r.fid_history[1].value, 49.0);
    EXPECT_EQ(r.best.step, r.fid_history[1].step);
    EXPECT_EQ(r.best.fid_history, r.fid_history);
}

TEST(Train, SmokeRunIsFiniteAndDeterministic) {
    const auto corpus = tiny_corpus();
    const auto tc = fast_config(12);
    const auto a = train(corpus, testutil::tiny_config(), tc);
    EXPECT_FALSE(a.early_stopped);
    EXPECT_EQ(a.steps_run, 12);
    ASSERT_EQ(a.log.size(), 12u);
    for (const auto& l : a.log) {
        EXPECT_TRUE(std::isfinite(l.d_loss));
        EXPECT_TRUE(std::isfinite(l.g_loss));
        EXPECT_TRUE(std::isfinite(l.r1));
        EXPECT_DOUBLE_EQ(l.learning_rate, 0.0015);
    }
    ASSERT_FALSE(a.fid_history.empty());
    EXPECT_EQ(a.fid_history.back().step, 12);
    for (const auto& f : a.fid_history) EXPECT_TRUE(std::isfinite(f.value));

    const auto b = train(corpus, testutil::tiny_config(), tc);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].d_loss, b.log[i].d_loss);
    std::vector<float> pa, pb;
    a.best.model.for_each_param([&](const std::string&, const std::vector<float>& v) { pa.insert(pa.end(), v.begin(), v.end()); });
    b.best.model.for_each_param([&](const std::string&, const std::vector<float>& v) { pb.insert(pb.end(), v.begin(), v.end()); });
    EXPECT_EQ(pa, pb);
}

TEST(Train, ParametersMoveAwayFromInit) {
    const auto r = train(tiny_corpus(), testutil::tiny_config(), fast_config(5));
    const Model init(testutil::tiny_config());
    std::vector<float> p0, p1;
    init.for_each_param([&](const std::string&, const std::vector<float>& v) { p0.insert(p0.end(), v.begin(), v.end()); });
    r.best.model.for_each_param([&](const std::string&, const std::vector<float>& v) { p1.insert(p1.end(), v.begin(), v.end()); });
    ASSERT_EQ(p0.size(), p1.size());
    EXPECT_NE(p0, p1);
}

TEST(Train, RejectsBadCorpus) {
    EXPECT_THROW(train({}, testutil::tiny_config(), fast_config(3)), InputError);
    EXPECT_THROW(train(tiny_corpus(4, 32), testutil::tiny_config(), fast_config(3)), InputError);
    auto bad = fast_config(3);
    bad.batch = 0;
    EXPECT_THROW(train(tiny_corpus(), testutil::tiny_config(), bad), InputError);
}
