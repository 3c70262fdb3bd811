#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "ganspire/errors.hpp"
#include "ganspire/fid.hpp"
#include "test_util.hpp"

using namespace ganspire;
using namespace ganspire::fid;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows random_rows(std::mt19937_64& rng, int n, int d, double shift = 0.0) {
    std::normal_distribution<double> nd;
    Rows out(n, std::vector<double>(d));
    for (auto& r : out)
        for (auto& v : r) v = nd(rng) + shift;
    return out;
}

// 2d points +-a e_i with a chosen so the unbiased covariance is exactly I.
Rows identity_cov_rows(int d, const std::vector<double>& mean) {
    const double a = std::sqrt((2.0 * d - 1.0) / 2.0);
    Rows out;
    for (int i = 0; i < d; ++i)
        for (double s : {a, -a}) {
            std::vector<double> r = mean;
            r[i] += s;
            out.push_back(r);
        }
    return out;
}

Rows to_rows(const nlohmann::json& j) { return j.get<Rows>(); }

}  // namespace

TEST(Fid, SelfDistanceIsZero) {
    std::mt19937_64 rng(1);
    const auto x = random_rows(rng, 40, 6);
    EXPECT_NEAR(compute_fid(x, x), 0.0, 1e-6);
}

TEST(Fid, IdentityCovarianceGivesSquaredMeanOffset) {
    const int d = 5;
    const std::vector<double> zero(d, 0.0), mu{0.5, -1.0, 2.0, 0.0, 0.25};
    const auto a = identity_cov_rows(d, zero);
    const auto b = identity_cov_rows(d, mu);
    const auto ga = fit_gaussian(a);
    EXPECT_TRUE(ga.cov.isApprox(Eigen::MatrixXd::Identity(d, d), 1e-12));
    double expected = 0.0;
    for (double v : mu) expected += v * v;
    EXPECT_NEAR(compute_fid(a, b), expected, 1e-9);
}

TEST(Fid, Symmetric) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto x = random_rows(rng, 30, 4), y = random_rows(rng, 25, 4, 0.5);
        EXPECT_NEAR(compute_fid(x, y), compute_fid(y, x), 1e-8);
        EXPECT_GE(compute_fid(x, y), 0.0);
    }
}

TEST(Fid, MatchesScipyOracle) {
    std::ifstream in(std::string(GANSPIRE_TEST_DATA) + "/fid_oracle.json");
    ASSERT_TRUE(in) << "missing fid_oracle.json";
    const auto doc = nlohmann::json::parse(in);
    for (const auto& c : doc.at("cases")) {
        const double want = c.at("fid").get<double>();
        const double got = compute_fid(to_rows(c.at("real")), to_rows(c.at("fake")));
        EXPECT_LT(testutil::rel_err(got, want), 1e-6) << got << " vs " << want;
    }
}

TEST(Fid, RejectsTooFewOrRaggedRows) {
    EXPECT_THROW(fit_gaussian({{1.0, 2.0}}), InputError);
    EXPECT_THROW(fit_gaussian({}), InputError);
    EXPECT_THROW(fit_gaussian({{1.0, 2.0}, {1.0}}), InputError);
}

TEST(FeatureExtractor, PinnedAndDeterministic) {
    const FeatureExtractor a, b;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.dimension(), 80u);
    EXPECT_NE(FeatureExtractor(kFeatureSeed + 1).hash(), a.hash());
    std::mt19937_64 rng(3);
    const auto img = testutil::blocky_image(rng, 32, 32);
    const auto f = a.features(img);
    EXPECT_EQ(f.size(), 80u);
    EXPECT_EQ(f, b.features(img));
}

TEST(FeatureExtractor, ImageSetFid) {
    std::mt19937_64 rng(4);
    std::vector<Image> real, other;
    for (int i = 0; i < 12; ++i) real.push_back(testutil::blocky_image(rng, 32, 32));
    for (int i = 0; i < 12; ++i) other.push_back(testutil::random_image(rng, 32, 32));
    const FeatureExtractor fx;
    EXPECT_NEAR(compute_fid(fx, real, real), 0.0, 1e-6);
    EXPECT_GT(compute_fid(fx, real, other), 0.0);
}
