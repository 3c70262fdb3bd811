#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ganspire/simd/kernels.hpp"

using namespace ganspire::simd;

namespace {

template <class T>
std::vector<T> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(u(rng));
    return v;
}

template <class T>
double tol() {
    return std::is_same_v<T, float> ? 2e-5 : 1e-12;
}

// Compare a vectorized table against the scalar reference on lengths that
// cover the empty case, partial tails and long runs.
template <class T>
void check_equivalent(const KernelTable<T>& simd) {
    const auto& ref = scalar_kernels<T>();
    std::mt19937_64 rng(3);
    std::vector<std::size_t> lengths;
    for (std::size_t n = 0; n <= 40; ++n) lengths.push_back(n);
    lengths.push_back(257);
    lengths.push_back(4099);
    for (std::size_t n : lengths) {
        const auto a = random_vec<T>(rng, n);
        const auto b = random_vec<T>(rng, n);
        const double scale_ref = std::max<double>(1.0, static_cast<double>(n));
        EXPECT_NEAR(simd.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), tol<T>() * scale_ref) << n;
        EXPECT_NEAR(simd.sum_sq_diff(a.data(), b.data(), n), ref.sum_sq_diff(a.data(), b.data(), n),
                    tol<T>() * scale_ref)
            << n;
        EXPECT_NEAR(simd.sum(a.data(), n), ref.sum(a.data(), n), tol<T>() * scale_ref) << n;

        auto y1 = b, y2 = b;
        simd.axpy(T(0.75), a.data(), y1.data(), n);
        ref.axpy(T(0.75), a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(y1[i], y2[i], tol<T>() * 4) << n << ":" << i;

        auto s1 = a, s2 = a;
        simd.scale(T(-1.5), s1.data(), n);
        ref.scale(T(-1.5), s2.data(), n);
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(s1[i], s2[i]);
    }
}

}  // namespace

TEST(Simd, ScalarReferenceValues) {
    const auto& k = scalar_kernels<double>();
    const double a[] = {1, 2, 3}, b[] = {4, 5, 6};
    EXPECT_EQ(k.dot(a, b, 3), 32.0);
    EXPECT_EQ(k.sum_sq_diff(a, b, 3), 27.0);
    EXPECT_EQ(k.sum(a, 3), 6.0);
}

TEST(Simd, Avx2MatchesScalarFloat) {
    const auto* t = avx2_kernels<float>();
    if (!t) GTEST_SKIP() << "AVX2 not available";
    check_equivalent(*t);
}

TEST(Simd, Avx2MatchesScalarDouble) {
    const auto* t = avx2_kernels<double>();
    if (!t) GTEST_SKIP() << "AVX2 not available";
    check_equivalent(*t);
}

TEST(Simd, NeonMatchesScalar) {
    const auto* f = neon_kernels<float>();
    const auto* d = neon_kernels<double>();
    if (!f || !d) GTEST_SKIP() << "NEON not available";
    check_equivalent(*f);
    check_equivalent(*d);
}

TEST(Simd, ActiveTableIsOneOfTheVariants) {
    const auto& a = active_kernels<float>();
    EXPECT_TRUE(a.name == "scalar" || a.name == "avx2" || a.name == "neon") << a.name;
}
