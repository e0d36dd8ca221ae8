#include "fairrobust/strategies.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fairrobust;

namespace {

Dataset two_rows()
{
    VectorXd z(2);
    z << 2.0, 4.0;
    return Dataset({Column::continuous("z", z)}, (VectorXi(2) << 0, 1).finished(), (VectorXi(2) << 0, 1).finished());
}

double pearson(const VectorXd& x, const VectorXd& y)
{
    const VectorXd xc = x.array() - x.mean();
    const VectorXd yc = y.array() - y.mean();
    return xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
}

// Analytic P{F=1} averaged over rows with the given label (or all rows when y < 0) and group.
double analytic_rate(const ThresholdPolicy& policy, const VectorXd& s, const VectorXi& y, const VectorXi& a, int want_y, int want_a)
{
    const VectorXd p = positive_probabilities(policy, s, a);
    double num = 0.0;
    int den = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (a(i) == want_a && (want_y < 0 || y(i) == want_y)) {
            num += p(i);
            ++den;
        }
    }
    return num / den;
}

struct Scored {
    VectorXd s;
    VectorXi y;
    VectorXi a;
};

// Group 1 scores are shifted up so the raw thresholds disagree.
Scored random_scored(Index n, Rng& r)
{
    Scored out{VectorXd(n), VectorXi(n), VectorXi(n)};
    for (Index i = 0; i < n; ++i) {
        out.a(i) = r.bernoulli(0.5);
        out.y(i) = r.bernoulli(0.3 + 0.3 * out.a(i));
        const double z = r.normal(1.2 * out.y(i) + 0.5 * out.a(i), 1.0);
        out.s(i) = 1.0 / (1.0 + std::exp(-z));
    }
    // Every (y, a) cell must be populated.
    out.y(0) = 0, out.a(0) = 0;
    out.y(1) = 1, out.a(1) = 0;
    out.y(2) = 0, out.a(2) = 1;
    out.y(3) = 1, out.a(3) = 1;
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Correlation remover

TEST(CorrelationRemover, HandExample)
{
    const auto ds = two_rows();
    const auto cr = fit_correlation_remover(ds);
    ASSERT_EQ(cr.columns.size(), 1u);
    EXPECT_DOUBLE_EQ(cr.protected_mean, 0.5);
    EXPECT_DOUBLE_EQ(cr.columns[0].beta, 2.0);
    const auto out = transform(cr, ds);
    EXPECT_DOUBLE_EQ(out.column(0).values(0), 3.0);
    EXPECT_DOUBLE_EQ(out.column(0).values(1), 3.0);
    EXPECT_EQ(out.labels(), ds.labels());
    EXPECT_EQ(out.protected_attr(), ds.protected_attr());
}

TEST(CorrelationRemover, OrthogonalColumnUnchanged)
{
    VectorXd z(4);
    z << 1.0, -1.0, 1.0, -1.0;
    const Dataset ds({Column::continuous("z", z)}, (VectorXi(4) << 0, 1, 0, 1).finished(), (VectorXi(4) << 0, 0, 1, 1).finished());
    const auto cr = fit_correlation_remover(ds);
    EXPECT_EQ(cr.columns[0].beta, 0.0);
    EXPECT_EQ(transform(cr, ds).column(0).values, z);
}

TEST(CorrelationRemover, ResidualsUncorrelatedWithProtected)
{
    const auto ds = synth_biased(5000, 1.0, 0.4, 3);
    const auto cr = fit_correlation_remover(ds);
    const auto out = transform(cr, ds);
    const VectorXd a = ds.protected_attr().cast<double>();
    // Discrete columns become one indicator per category.
    EXPECT_EQ(out.cols(), 2 + 3);
    for (Index j = 0; j < out.cols(); ++j) {
        EXPECT_EQ(out.column(j).kind, FeatureKind::continuous);
        EXPECT_LT(std::abs(pearson(out.column(j).values, a)), 1e-8) << out.column(j).name;
        EXPECT_LT(std::abs((a.array() - a.mean()).matrix().dot(out.column(j).values)), 1e-8);
    }
    EXPECT_TRUE(out.find_column("c=mid"));
}

TEST(CorrelationRemover, RefitOnResidualsIsIdentity)
{
    const auto ds = synth_biased(3000, 0.8, 0.5, 4);
    const auto once = transform(fit_correlation_remover(ds), ds);
    const auto cr2 = fit_correlation_remover(once);
    const auto twice = transform(cr2, once);
    for (Index j = 0; j < once.cols(); ++j) {
        EXPECT_LT(std::abs(cr2.columns[static_cast<std::size_t>(j)].beta), 1e-12);
        EXPECT_LT((twice.column(j).values - once.column(j).values).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(CorrelationRemover, Errors)
{
    VectorXd z(3);
    z << 1.0, 2.0, 3.0;
    const Dataset flat({Column::continuous("z", z)}, (VectorXi(3) << 0, 1, 0).finished(), VectorXi::Zero(3));
    EXPECT_THROW(fit_correlation_remover(flat), DataError);
    const auto cr = fit_correlation_remover(two_rows());
    const Dataset other({Column::continuous("w", z)}, (VectorXi(3) << 0, 1, 0).finished(), (VectorXi(3) << 0, 1, 0).finished());
    EXPECT_THROW(transform(cr, other), DataError);
}

// ---------------------------------------------------------------------------
// Exponentiated gradient

TEST(ExpGrad, EqualLossesKeepUniformWeights)
{
    VectorXd w = VectorXd::Constant(1, 1.0);
    for (int k = 2; k <= 20; ++k) {
        w = admit_predictor(w);
        w = exponentiated_update(w, VectorXd::Constant(k, 0.37), 2.0);
        for (Index i = 0; i < k; ++i) {
            ASSERT_NEAR(w(i), 1.0 / k, 1e-15);
        }
    }
}

TEST(ExpGrad, UpdateFavoursLowerLoss)
{
    VectorXd w = VectorXd::Constant(3, 1.0 / 3.0);
    VectorXd loss(3);
    loss << 0.1, 0.5, 0.3;
    const auto v = exponentiated_update(w, loss, 2.0);
    EXPECT_NEAR(v.sum(), 1.0, 1e-15);
    EXPECT_GT(v(0), v(2));
    EXPECT_GT(v(2), v(1));
    // Ratio oracle: w_i / w_j = exp(-eta (l_i - l_j)).
    EXPECT_NEAR(v(0) / v(1), std::exp(0.8), 1e-12);
    EXPECT_THROW(exponentiated_update(w, VectorXd(2), 1.0), ValidationError);
}

TEST(ExpGrad, MomentsByHand)
{
    VectorXd h(4);
    h << 1, 0, 1, 1;
    const VectorXi y = (VectorXi(4) << 0, 1, 0, 1).finished();
    const VectorXi a = (VectorXi(4) << 0, 0, 1, 1).finished();
    const auto m = constraint_moments(FairnessMetricId::dp, h, y, a);
    ASSERT_EQ(m.size(), 4);
    // E[h] = 0.75, E[h|A=0] = 0.5, E[h|A=1] = 1
    EXPECT_DOUBLE_EQ(m(0), -0.25);
    EXPECT_DOUBLE_EQ(m(1), 0.25);
    EXPECT_DOUBLE_EQ(m(2), 0.25);
    EXPECT_DOUBLE_EQ(m(3), -0.25);
    EXPECT_EQ(constraint_moments(FairnessMetricId::eo, h, y, a).size(), 8);
}

TEST(ExpGrad, SimplexAndDualInvariants)
{
    const auto ds = synth_biased(3000, 1.0, 0.5, 5);
    for (auto c : {FairnessMetricId::dp, FairnessMetricId::eo}) {
        ExpGradConfig cfg;
        cfg.constraint = c;
        cfg.t_max = 15;
        const auto st = fit_expgrad(ds, Learner::logreg, Hyperparameters{}, cfg, 9);
        ASSERT_FALSE(st.history.empty());
        double running = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < st.history.size(); ++t) {
            const auto& it = st.history[t];
            EXPECT_EQ(it.weights.size(), static_cast<Index>(t + 1));
            EXPECT_NEAR(it.weights.sum(), 1.0, 1e-12);
            EXPECT_TRUE((it.weights.array() >= 0.0).all());
            EXPECT_TRUE((it.lambda.array() >= 0.0).all());
            EXPECT_LE(it.lambda.sum(), cfg.bound * (1.0 + 1e-12));
            const double next = std::min(running, it.max_violation);
            EXPECT_LE(next, running);
            running = next;
        }
        EXPECT_EQ(st.predictors.size(), st.history.size());
        EXPECT_EQ(st.converged, st.history.back().max_violation <= cfg.eps_tol);
        const auto q = mixture_scores(st, ds);
        EXPECT_TRUE((q.array() >= 0.0).all() && (q.array() <= 1.0 + 1e-12).all());
    }
}

TEST(ExpGrad, ReducesDisparityOnHeldOutData)
{
    const auto train_ds = synth_biased(20000, 1.0, 0.5, 21);
    const auto test_ds = synth_biased(20000, 1.0, 0.5, 22);
    StrategyConfig sc;
    sc.expgrad.eps_tol = 0.02;
    sc.seed = 3;
    const auto f0 = fit_strategy(StrategyId::f0, train_ds, FairnessMetricId::dp, sc);
    const auto f2 = fit_strategy(StrategyId::f2, train_ds, FairnessMetricId::dp, sc);
    const auto& y = test_ds.labels();
    const auto& a = test_ds.protected_attr();
    const double m0 = metric(FairnessMetricId::dp, predict(f0, test_ds, 1), y, a);
    const double m2 = metric(FairnessMetricId::dp, predict(f2, test_ds, 1), y, a);
    EXPECT_LE(m2, m0);
}

TEST(ExpGrad, ConfigErrors)
{
    const auto ds = synth_biased(200, 1.0, 0.5, 1);
    ExpGradConfig cfg;
    cfg.constraint = FairnessMetricId::fp;
    EXPECT_THROW(fit_expgrad(ds, Learner::logreg, Hyperparameters{}, cfg, 0), ConfigError);
    cfg.constraint = FairnessMetricId::dp;
    cfg.eps_tol = 0.0;
    EXPECT_THROW(fit_expgrad(ds, Learner::logreg, Hyperparameters{}, cfg, 0), ConfigError);
}

// ---------------------------------------------------------------------------
// Threshold policy

TEST(ThresholdPolicy, PiecewiseLaw)
{
    const GroupThresholds g{0.2, 0.8, 0.3, 0.7};
    EXPECT_EQ(positive_probability(g, 0.9), 1.0);
    EXPECT_EQ(positive_probability(g, 0.1), 0.0);
    EXPECT_EQ(positive_probability(g, 0.5), 0.3);
    EXPECT_EQ(positive_probability(g, 0.2), 0.3);
    EXPECT_EQ(positive_probability(g, 0.8), 0.3);
    for (double u : {0.0, 0.5, 0.999999}) {
        EXPECT_EQ(randomized_predict(g, 0.9, u), 1);
        EXPECT_EQ(randomized_predict(g, 0.1, u), 0);
    }
    // Plain threshold.
    const GroupThresholds plain{0.5, 0.5, 0.0, 1.0};
    EXPECT_EQ(positive_probability(plain, 0.5), 0.0);
    EXPECT_EQ(positive_probability(plain, 0.50001), 1.0);
}

TEST(ThresholdPolicy, BandFrequency)
{
    const GroupThresholds g{0.2, 0.8, 0.3, 0.7};
    Rng r(12);
    const int n = 1000000;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
        pos += randomized_predict(g, 0.5, r.uniform());
    }
    EXPECT_NEAR(static_cast<double>(pos) / n, 0.3, 0.002);
}

TEST(ThresholdPolicy, StreamPredictMatchesLawWithinBinomialError)
{
    const auto ds = synth_biased(1000, 1.0, 0.5, 13);
    ThresholdPolicy policy;
    policy.model = fit_baseline(ds, Learner::logreg, Hyperparameters{}, 0);
    policy.groups[0] = {0.1, 0.9, 0.4, 0.6};
    policy.groups[1] = {0.2, 0.7, 0.25, 0.75};
    NoiseStream stream(99);
    for (Index i = 0; i < 5; ++i) {
        const auto row = input_row(policy.model, ds, i);
        const int a = ds.protected_attr()(i);
        const double p = positive_probability(policy.groups[static_cast<std::size_t>(a)], score(policy.model, row));
        const int n = 20000;
        int pos = 0;
        for (int k = 0; k < n; ++k) {
            pos += randomized_predict(policy, row, a, stream);
        }
        EXPECT_NEAR(static_cast<double>(pos) / n, p, 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12);
    }
}

TEST(ThresholdPolicy, RowCoinsAreDeterministicUniforms)
{
    double sum = 0.0;
    for (Index i = 0; i < 100000; ++i) {
        const double u = row_coin(5, i);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_EQ(u, row_coin(5, i));
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
    EXPECT_NE(row_coin(5, 0), row_coin(6, 0));
}

TEST(ThresholdPolicy, EqualizedOddsHoldsAnalyticallyOnFittingData)
{
    Rng r(14);
    for (int trial = 0; trial < 25; ++trial) {
        const auto d = random_scored(static_cast<Index>(50 + r.uniform_index(400)), r);
        const auto policy = fit_threshold_optimizer(d.s, d.y, d.a, FairnessMetricId::eo);
        for (int y = 0; y < 2; ++y) {
            EXPECT_NEAR(analytic_rate(policy, d.s, d.y, d.a, y, 0), analytic_rate(policy, d.s, d.y, d.a, y, 1), 1e-9)
                << "trial " << trial << " y " << y << "\n"
                << format_policy(policy);
        }
        for (const auto& g : policy.groups) {
            EXPECT_NEAR(g.p0 + g.p1, 1.0, 1e-12);
            EXPECT_GE(g.p0, 0.0);
            EXPECT_GE(g.p1, 0.0);
            EXPECT_LE(g.t0, g.t1);
        }
    }
}

TEST(ThresholdPolicy, DemographicParityHoldsAnalyticallyOnFittingData)
{
    Rng r(15);
    for (int trial = 0; trial < 25; ++trial) {
        const auto d = random_scored(static_cast<Index>(50 + r.uniform_index(400)), r);
        const auto policy = fit_threshold_optimizer(d.s, d.y, d.a, FairnessMetricId::dp);
        EXPECT_NEAR(analytic_rate(policy, d.s, d.y, d.a, -1, 0), analytic_rate(policy, d.s, d.y, d.a, -1, 1), 1e-9);
        for (const auto& g : policy.groups) {
            EXPECT_NEAR(g.p0 + g.p1, 1.0, 1e-12);
            EXPECT_LE(g.t0, g.t1);
        }
    }
}

TEST(ThresholdPolicy, SymmetricGroupsGiveOnePolicy)
{
    Rng r(16);
    const Index half = 300;
    VectorXd s(2 * half);
    VectorXi y(2 * half), a(2 * half);
    for (Index i = 0; i < half; ++i) {
        y(i) = y(i + half) = r.bernoulli(0.4);
        s(i) = s(i + half) = 1.0 / (1.0 + std::exp(-r.normal(1.5 * y(i), 1.0)));
        a(i) = 0;
        a(i + half) = 1;
    }
    for (auto c : {FairnessMetricId::eo, FairnessMetricId::dp}) {
        const auto policy = fit_threshold_optimizer(s, y, a, c);
        EXPECT_EQ(policy.groups[0], policy.groups[1]) << format_policy(policy);
    }
}

TEST(ThresholdPolicy, FreshDrawEqualizedOdds)
{
    const auto train_ds = synth_biased(20000, 1.0, 0.5, 31);
    const auto test_ds = synth_biased(50000, 1.0, 0.5, 32);
    StrategyConfig sc;
    const auto f3 = fit_strategy(StrategyId::f3, train_ds, FairnessMetricId::eo, sc);
    const auto pred = predict(f3, test_ds, 4);
    EXPECT_LE(metric(FairnessMetricId::eo, pred, test_ds.labels(), test_ds.protected_attr()), 0.05);
}

TEST(ThresholdPolicy, FormatRoundTrip)
{
    ThresholdPolicy p;
    p.groups[0] = {0.1234567890123456789, 0.75, 1.0 / 3.0, 2.0 / 3.0};
    p.groups[1] = {-std::numeric_limits<double>::infinity(), 0.4, 0.0, 1.0};
    EXPECT_EQ(parse_policy(format_policy(p)), p.groups);
    EXPECT_THROW(parse_policy("0 1 2 3 4\n"), DataError);
    EXPECT_THROW(parse_policy("0 1 2 x 4\n1 1 2 3 4\n"), DataError);
}

TEST(ThresholdPolicy, Errors)
{
    VectorXd s(4);
    s << 0.1, 0.2, 0.3, 0.4;
    const VectorXi y = (VectorXi(4) << 0, 1, 0, 0).finished();
    const VectorXi a = (VectorXi(4) << 0, 0, 1, 1).finished();
    EXPECT_THROW(fit_threshold_optimizer(s, y, a, FairnessMetricId::eo), UndefinedMetric);
    EXPECT_THROW(fit_threshold_optimizer(s, y, a, FairnessMetricId::tp), ConfigError);
    EXPECT_THROW(fit_threshold_optimizer(s, y, VectorXi::Zero(4), FairnessMetricId::dp), UndefinedMetric);
}

// ---------------------------------------------------------------------------
// Front end

TEST(Strategies, NamesAndConstraintMapping)
{
    for (auto s : all_strategies()) {
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    }
    EXPECT_THROW(parse_strategy("f9"), ConfigError);
    EXPECT_EQ(constraint_for(FairnessMetricId::dp), FairnessMetricId::dp);
    EXPECT_EQ(constraint_for(FairnessMetricId::eo), FairnessMetricId::eo);
    EXPECT_EQ(constraint_for(FairnessMetricId::fp), FairnessMetricId::eo);
    EXPECT_EQ(constraint_for(FairnessMetricId::tp), FairnessMetricId::eo);
}

TEST(Strategies, BaselineUsesProtectedAndIsDeterministic)
{
    const auto ds = synth_biased(1000, 1.0, 0.5, 40);
    const auto m = fit_baseline(ds, Learner::logreg, Hyperparameters{}, 1);
    EXPECT_TRUE(m.encoder.includes_protected());
    EXPECT_EQ(m, fit_baseline(ds, Learner::logreg, Hyperparameters{}, 1));
}

TEST(Strategies, AllStrategiesPredictDeterministically)
{
    const auto train_ds = synth_biased(2000, 1.0, 0.5, 41);
    const auto test_ds = synth_biased(500, 1.0, 0.5, 42);
    StrategyConfig sc;
    sc.expgrad.t_max = 10;
    for (auto id : all_strategies()) {
        for (auto c : {FairnessMetricId::dp, FairnessMetricId::eo}) {
            const auto fs = fit_strategy(id, train_ds, c, sc);
            const auto p1 = predict(fs, test_ds, 7);
            EXPECT_EQ(p1, predict(fs, test_ds, 7));
            EXPECT_EQ(p1.size(), test_ds.rows());
            EXPECT_TRUE((p1.array() >= 0).all() && (p1.array() <= 1).all());
        }
    }
}
