#include "fairrobust/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace fairrobust;

TEST(Rng, SameSeedSameStream)
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
    }
}

TEST(Rng, DeriveSeedChains)
{
    for (Seed s : {0ull, 1ull, 0xDEADBEEFull}) {
        EXPECT_EQ(derive_seed(s, {3, 5}), derive_seed(derive_seed(s, {3}), {5}));
        EXPECT_NE(derive_seed(s, {3, 5}), derive_seed(s, {5, 3}));
    }
}

TEST(Rng, DerivedSeedsDistinct)
{
    std::set<Seed> seen;
    for (std::uint64_t k = 0; k < 20; ++k) {
        for (std::uint64_t j = 0; j < 50; ++j) {
            seen.insert(derive_seed(7, {k, j}));
        }
    }
    EXPECT_EQ(seen.size(), 1000u);
}

TEST(Rng, UniformRange)
{
    Rng r(1);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_LT(lo, 1e-3);
    EXPECT_GT(hi, 1.0 - 1e-3);
}

TEST(Rng, UniformIndexCoversRange)
{
    Rng r(2);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = r.uniform_index(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    // Each cell is Binomial(n, 1/7).
    const double sd = std::sqrt(n * (1.0 / 7) * (6.0 / 7));
    for (int c : counts) {
        EXPECT_NEAR(c, n / 7.0, 4.0 * sd);
    }
}

TEST(Rng, NormalMoments)
{
    Rng r(3);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(2.0, 3.0);
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 2.0, 4.0 * 3.0 / std::sqrt(n));
    EXPECT_NEAR(var, 9.0, 0.1);
}

TEST(Rng, LaplaceMoments)
{
    Rng r(4);
    const int n = 400000;
    const double k = 1.5;
    double s1 = 0.0, s2 = 0.0, sabs = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.laplace(k);
        s1 += x;
        s2 += x * x;
        sabs += std::abs(x);
    }
    EXPECT_NEAR(s1 / n, 0.0, 4.0 * std::sqrt(2.0) * k / std::sqrt(n));
    // E|X| = k, Var X = 2k^2
    EXPECT_NEAR(sabs / n, k, 0.01);
    EXPECT_NEAR(s2 / n, 2.0 * k * k, 0.05);
}

TEST(Rng, PermutationIsPermutation)
{
    Rng r(5);
    for (Index n : {1, 2, 10, 257}) {
        auto p = random_permutation(n, r);
        std::sort(p.begin(), p.end());
        for (Index i = 0; i < n; ++i) {
            ASSERT_EQ(p[static_cast<std::size_t>(i)], i);
        }
    }
}
