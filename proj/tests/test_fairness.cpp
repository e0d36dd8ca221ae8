#include "fairrobust/fairness.hpp"
#include "fairrobust/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>

using namespace fairrobust;

namespace {

VectorXi vec(std::initializer_list<int> v)
{
    VectorXi out(static_cast<Index>(v.size()));
    Index i = 0;
    for (int x : v) {
        out(i++) = x;
    }
    return out;
}

// Independent oracle: conditional frequency by a direct scan.
std::optional<double> cond_rate(const VectorXi& p, const VectorXi& y, const VectorXi& a, int want_y, int want_a)
{
    int num = 0, den = 0;
    for (Index i = 0; i < p.size(); ++i) {
        if ((want_y < 0 || y(i) == want_y) && a(i) == want_a) {
            ++den;
            num += p(i);
        }
    }
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / den;
}

std::optional<double> oracle(FairnessMetricId id, const VectorXi& p, const VectorXi& y, const VectorXi& a)
{
    auto gap = [&](int yy) -> std::optional<double> {
        const auto r0 = cond_rate(p, y, a, yy, 0);
        const auto r1 = cond_rate(p, y, a, yy, 1);
        if (!r0 || !r1) {
            return std::nullopt;
        }
        return std::abs(*r0 - *r1);
    };
    switch (id) {
    case FairnessMetricId::dp: return gap(-1);
    case FairnessMetricId::fp: return gap(0);
    case FairnessMetricId::tp: return gap(1);
    case FairnessMetricId::eo: {
        const auto f = gap(0), t = gap(1);
        if (!f || !t) {
            return std::nullopt;
        }
        return std::max(*f, *t);
    }
    }
    return std::nullopt;
}

GroupRates rates_from(std::array<std::array<Index, 2>, 2> count, std::array<std::array<Index, 2>, 2> positive)
{
    GroupRates gr;
    gr.count = count;
    gr.positive = positive;
    return gr;
}

} // namespace

TEST(Fairness, GroupRatesHandCount)
{
    const auto gr = group_rates(vec({1, 0}), vec({1, 0}), vec({0, 1}));
    EXPECT_EQ(gr.group_count(0), 1);
    EXPECT_EQ(gr.group_positive(0), 1);
    EXPECT_EQ(gr.group_count(1), 1);
    EXPECT_EQ(gr.group_positive(1), 0);
    EXPECT_EQ(gr.total(), 2);
}

TEST(Fairness, EmptyGroupIsUndefined)
{
    const auto gr = group_rates(vec({1, 0, 1}), vec({1, 0, 0}), vec({0, 0, 0}));
    EXPECT_FALSE(gr.selection_rate(1));
    EXPECT_FALSE(gr.positive_rate(0, 1));
    EXPECT_FALSE(gr.positive_rate(1, 1));
    try {
        demographic_parity(gr);
        FAIL();
    } catch (const UndefinedMetric& e) {
        EXPECT_NE(std::string(e.what()).find("empty protected group"), std::string::npos);
    }
    const auto one = group_rates(vec({1}), vec({0}), vec({1}));
    EXPECT_EQ(one.count[0][1], 1);
    EXPECT_EQ(one.total(), 1);
}

TEST(Fairness, InputErrors)
{
    EXPECT_THROW(group_rates(vec({1, 0}), vec({1}), vec({0, 1})), DataError);
    EXPECT_THROW(group_rates(VectorXi(), VectorXi(), VectorXi()), DataError);
    EXPECT_THROW(group_rates(vec({2}), vec({1}), vec({0})), DataError);
}

TEST(Fairness, DemographicParityExamples)
{
    // selection rates 0.5 and 0.25
    EXPECT_DOUBLE_EQ(demographic_parity(rates_from({{{2, 4}, {2, 0}}}, {{{1, 1}, {1, 0}}})), 0.25);
    EXPECT_EQ(metric(FairnessMetricId::dp, vec({1, 1, 1, 1}), vec({0, 1, 0, 1}), vec({0, 0, 1, 1})), 0.0);
    EXPECT_EQ(metric(FairnessMetricId::dp, vec({1, 1, 0, 0}), vec({0, 1, 0, 1}), vec({0, 0, 1, 1})), 1.0);
}

TEST(Fairness, FalsePositiveExamples)
{
    // FP rates 0.2 and 0.1
    EXPECT_NEAR(false_positive_diff(rates_from({{{10, 10}, {1, 1}}}, {{{2, 1}, {1, 1}}})), 0.1, 1e-15);
    // perfect classifier
    const auto y = vec({0, 1, 0, 1});
    EXPECT_EQ(metric(FairnessMetricId::fp, y, y, vec({0, 0, 1, 1})), 0.0);
    // group 1 has no Y=0 rows
    EXPECT_THROW(metric(FairnessMetricId::fp, vec({0, 1, 1}), vec({0, 1, 1}), vec({0, 0, 1})), UndefinedMetric);
}

TEST(Fairness, TruePositiveExamples)
{
    EXPECT_NEAR(true_positive_diff(rates_from({{{1, 1}, {10, 10}}}, {{{0, 0}, {9, 6}}})), 0.3, 1e-15);
    EXPECT_EQ(true_positive_diff(rates_from({{{1, 1}, {4, 8}}}, {{{0, 0}, {2, 4}}})), 0.0);
    EXPECT_THROW(metric(FairnessMetricId::tp, vec({0, 0, 1}), vec({0, 0, 1}), vec({0, 1, 1})), UndefinedMetric);
}

TEST(Fairness, EqualizedOddsIsMaxOfSlices)
{
    // (M_fp, M_tp) = (0.1, 0.3) -> 0.3
    EXPECT_NEAR(equalized_odds(rates_from({{{10, 10}, {10, 10}}}, {{{2, 1}, {9, 6}}})), 0.3, 1e-15);
    EXPECT_EQ(equalized_odds(rates_from({{{10, 10}, {10, 10}}}, {{{2, 2}, {9, 9}}})), 0.0);
    // (0.4, 0.0) -> 0.4
    EXPECT_NEAR(equalized_odds(rates_from({{{10, 10}, {10, 10}}}, {{{5, 1}, {7, 7}}})), 0.4, 1e-15);
    EXPECT_THROW(equalized_odds(rates_from({{{0, 10}, {10, 10}}}, {{{0, 1}, {7, 7}}})), UndefinedMetric);
}

TEST(Fairness, MetricNames)
{
    for (auto m : all_metrics()) {
        EXPECT_EQ(parse_metric(to_string(m)), m);
    }
    EXPECT_THROW(parse_metric("xx"), ConfigError);
}

TEST(Fairness, BruteForceAgainstOracle)
{
    // Every prediction vector for random (Y, A) of size N <= 10.
    Rng r(31);
    for (int n = 1; n <= 10; ++n) {
        VectorXi y(n), a(n);
        for (Index i = 0; i < n; ++i) {
            y(i) = r.bernoulli(0.5);
            a(i) = r.bernoulli(0.5);
        }
        for (int mask = 0; mask < (1 << n); ++mask) {
            VectorXi p(n);
            for (Index i = 0; i < n; ++i) {
                p(i) = (mask >> i) & 1;
            }
            for (auto id : all_metrics()) {
                const auto want = oracle(id, p, y, a);
                if (want) {
                    const double got = metric(id, p, y, a);
                    ASSERT_NEAR(got, *want, 1e-15);
                    ASSERT_GE(got, 0.0);
                    ASSERT_LE(got, 1.0);
                } else {
                    ASSERT_THROW(metric(id, p, y, a), UndefinedMetric);
                }
            }
        }
    }
}

TEST(Fairness, PermutationAndGroupSwapInvariance)
{
    Rng r(32);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Index>(8 + r.uniform_index(60));
        VectorXi p(n), y(n), a(n);
        for (Index i = 0; i < n; ++i) {
            p(i) = r.bernoulli(0.5);
            y(i) = static_cast<int>(i % 2);
            a(i) = static_cast<int>((i / 2) % 2);
        }
        const auto perm = random_permutation(n, r);
        VectorXi pp(n), yp(n), ap(n);
        for (Index i = 0; i < n; ++i) {
            const auto j = perm[static_cast<std::size_t>(i)];
            pp(i) = p(j);
            yp(i) = y(j);
            ap(i) = a(j);
        }
        const VectorXi swapped = (1 - a.array()).matrix();
        for (auto id : all_metrics()) {
            const double base = metric(id, p, y, a);
            EXPECT_EQ(metric(id, pp, yp, ap), base);
            EXPECT_EQ(metric(id, p, y, swapped), base);
        }
    }
}
