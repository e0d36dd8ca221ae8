#include "fairrobust/models.hpp"
#include "fairrobust/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fairrobust;

namespace {

Dataset xy(const std::vector<std::vector<double>>& cols, const std::vector<int>& y)
{
    const auto n = static_cast<Index>(y.size());
    std::vector<Column> columns;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        columns.push_back(Column::continuous("x" + std::to_string(j), Eigen::Map<const VectorXd>(cols[j].data(), n)));
    }
    VectorXi yl = Eigen::Map<const VectorXi>(y.data(), n);
    VectorXi a(n);
    for (Index i = 0; i < n; ++i) {
        a(i) = static_cast<int>(i % 2);
    }
    return Dataset(std::move(columns), yl, a);
}

double accuracy(const VectorXi& p, const VectorXi& y)
{
    return static_cast<double>((p.array() == y.array()).count()) / static_cast<double>(y.size());
}

Dataset mixed(Index n, Seed seed)
{
    Rng r(seed);
    VectorXd x(n);
    VectorXi c(n), y(n), a(n);
    for (Index i = 0; i < n; ++i) {
        a(i) = r.bernoulli(0.5);
        c(i) = static_cast<int>(r.uniform_index(3));
        x(i) = r.normal(a(i) + 0.5 * c(i), 1.0);
        y(i) = r.bernoulli(1.0 / (1.0 + std::exp(-(x(i) - 1.0))));
    }
    return Dataset({Column::continuous("x", x), Column::discrete("c", c, {"lo", "mid", "hi"})}, y, a);
}

} // namespace

TEST(Models, LearnerNames)
{
    for (auto l : all_learners()) {
        EXPECT_EQ(parse_learner(to_string(l)), l);
    }
    EXPECT_EQ(all_learners().size(), 5u);
    EXPECT_THROW(parse_learner("forest"), ConfigError);
}

TEST(Models, LogregSeparatesTwoPoints)
{
    const auto ds = xy({{-1.0, 1.0}}, {0, 1});
    TrainOptions opt;
    opt.include_protected = false;
    const auto m = train(ds, Learner::logreg, Hyperparameters{}, 0, opt);
    EXPECT_EQ(accuracy(predict(m, ds), ds.labels()), 1.0);
}

TEST(Models, TreeSolvesXor)
{
    const auto ds = xy({{0, 0, 1, 1}, {0, 1, 0, 1}}, {0, 1, 1, 0});
    Hyperparameters h;
    h.tree_max_depth = 2;
    h.tree_min_samples_leaf = 1;
    TrainOptions opt;
    opt.include_protected = false;
    const auto m = train(ds, Learner::decision_tree, h, 0, opt);
    EXPECT_EQ(accuracy(predict(m, ds), ds.labels()), 1.0);
}

TEST(Models, NaiveBayesGaussianClusters)
{
    auto draw = [](Seed seed) {
        Rng r(seed);
        std::vector<double> x;
        std::vector<int> y;
        for (int i = 0; i < 1000; ++i) {
            x.push_back(r.normal(-3.0, 1.0));
            y.push_back(0);
            x.push_back(r.normal(3.0, 1.0));
            y.push_back(1);
        }
        return xy({x}, y);
    };
    TrainOptions opt;
    opt.include_protected = false;
    const auto m = train(draw(1), Learner::naive_bayes, Hyperparameters{}, 0, opt);
    const auto held = draw(2);
    // Bayes error is Phi(-3) ~ 0.00135.
    EXPECT_GT(accuracy(predict(m, held), held.labels()), 0.99);
}

TEST(Models, TreeLeafFraction)
{
    const auto ds = xy({{0, 1, 2, 3}}, {1, 1, 1, 0});
    TrainOptions opt;
    opt.include_protected = false;
    // Four rows cannot be split with a minimum leaf of five, so the root is the leaf.
    const auto m = train(ds, Learner::decision_tree, Hyperparameters{}, 0, opt);
    EXPECT_DOUBLE_EQ(score(m, FeatureRow{1.5}), 0.75);
}

TEST(Models, ZeroWeightLogregScoresHalf)
{
    auto m = train(mixed(200, 1), Learner::logreg, Hyperparameters{}, 0);
    auto& p = std::get<LinearParams>(m.params);
    p.coef.setZero();
    p.intercept = 0.0;
    const auto s = scores(m, mixed(50, 2));
    for (Index i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s(i), 0.5);
    }
}

TEST(Models, TieRule)
{
    EXPECT_EQ(label_from_score(0.75), 1);
    EXPECT_EQ(label_from_score(0.5), 1);
    EXPECT_EQ(label_from_score(0.49), 0);
    auto m = train(mixed(200, 1), Learner::logreg, Hyperparameters{}, 0);
    auto& p = std::get<LinearParams>(m.params);
    p.coef.setZero();
    p.intercept = 0.0;
    EXPECT_EQ(predict(m, FeatureRow{0.3, std::string("mid"), 1.0}), 1);
}

TEST(Models, LogisticGradientMatchesFiniteDifferences)
{
    Rng r(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 30, d = 4;
        MatrixXd x(n, d);
        VectorXd y(n), w(n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < d; ++j) {
                x(i, j) = r.normal();
            }
            y(i) = r.bernoulli(0.5);
            w(i) = 0.1 + r.uniform();
        }
        LinearParams p{VectorXd(d), r.normal()};
        for (Index j = 0; j < d; ++j) {
            p.coef(j) = r.normal();
        }
        const double l2 = 0.01;
        VectorXd g;
        logistic_objective(x, y, w, p, l2, &g);
        const double h = 1e-5;
        for (Index j = 0; j <= d; ++j) {
            LinearParams lo = p, hi = p;
            if (j < d) {
                lo.coef(j) -= h;
                hi.coef(j) += h;
            } else {
                lo.intercept -= h;
                hi.intercept += h;
            }
            const double fd = (logistic_objective(x, y, w, hi, l2) - logistic_objective(x, y, w, lo, l2)) / (2.0 * h);
            EXPECT_NEAR(g(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Models, ScoresInUnitIntervalAllLearners)
{
    const auto tr = mixed(600, 3);
    const auto te = mixed(300, 4);
    for (auto l : all_learners()) {
        const auto m = train(tr, l, Hyperparameters{}, 7);
        const auto s = scores(m, te);
        EXPECT_TRUE((s.array() >= 0.0).all() && (s.array() <= 1.0).all()) << to_string(l);
        const auto pred = predict(m, te);
        for (Index i = 0; i < te.rows(); ++i) {
            ASSERT_EQ(pred(i), label_from_score(s(i)));
            ASSERT_DOUBLE_EQ(score(m, input_row(m, te, i)), s(i));
        }
        EXPECT_GT(accuracy(pred, te.labels()), 0.55) << to_string(l);
    }
}

TEST(Models, DeterministicTraining)
{
    const auto tr = mixed(400, 5);
    for (auto l : all_learners()) {
        EXPECT_EQ(train(tr, l, Hyperparameters{}, 11), train(tr, l, Hyperparameters{}, 11)) << to_string(l);
    }
}

TEST(Models, SaveLoadRoundTrip)
{
    const auto tr = mixed(400, 6);
    const auto te = mixed(100, 7);
    for (auto l : all_learners()) {
        for (bool with_a : {true, false}) {
            TrainOptions opt;
            opt.include_protected = with_a;
            const auto m = train(tr, l, Hyperparameters{}, 3, opt);
            const auto text = format_model(m);
            const auto back = parse_model(text);
            EXPECT_EQ(back, m) << to_string(l);
            EXPECT_EQ(format_model(back), text);
            EXPECT_EQ(scores(back, te), scores(m, te));
        }
    }
    EXPECT_THROW(parse_model("format=other\n"), DataError);
    EXPECT_THROW(parse_model("nonsense\n"), DataError);
}

TEST(Models, UnseenCategoryEncodesToZeros)
{
    const auto m = train(mixed(300, 8), Learner::logreg, Hyperparameters{}, 0);
    const auto known = m.encoder.encode_row(FeatureRow{0.0, std::string("mid"), 0.0});
    const auto unseen = m.encoder.encode_row(FeatureRow{0.0, std::string("ultra"), 0.0});
    const auto& block = m.encoder.blocks()[1];
    EXPECT_EQ(known.segment(block.offset, block.width).sum(), 1.0);
    EXPECT_EQ(unseen.segment(block.offset, block.width).sum(), 0.0);
    const double s = score(m, FeatureRow{0.0, std::string("ultra"), 0.0});
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_THROW(score(m, FeatureRow{0.0}), DataError);
    EXPECT_THROW(score(m, FeatureRow{std::string("x"), std::string("mid"), 0.0}), DataError);
}

TEST(Models, StandardizationUsesTrainingStatistics)
{
    const auto tr = mixed(500, 9);
    const auto enc = Encoder::fit(tr, false);
    const auto& b = enc.blocks()[0];
    const auto& x = tr.column(0).values;
    EXPECT_NEAR(b.mean, x.mean(), 1e-12);
    const MatrixXd z = enc.encode(tr);
    EXPECT_NEAR(z.col(b.offset).mean(), 0.0, 1e-12);
    EXPECT_EQ(enc.width(), 4);
    EXPECT_EQ(Encoder::fit(tr, true).width(), 6);
}

TEST(Models, TrainingErrors)
{
    const auto ds = xy({{0, 1, 2}}, {1, 1, 1});
    EXPECT_THROW(train(ds, Learner::logreg, Hyperparameters{}, 0), DataError);
    const auto ok = mixed(100, 1);
    TrainOptions bad;
    bad.weights = VectorXd::Zero(100);
    EXPECT_THROW(train(ok, Learner::logreg, Hyperparameters{}, 0, bad), DataError);
    bad.weights = VectorXd::Ones(3);
    EXPECT_THROW(train(ok, Learner::logreg, Hyperparameters{}, 0, bad), DataError);
}

TEST(Models, WeightsAndLabelOverride)
{
    const auto ds = mixed(400, 10);
    TrainOptions flip;
    flip.labels = (1 - ds.labels().array()).matrix();
    const auto m = train(ds, Learner::logreg, Hyperparameters{}, 0);
    const auto mf = train(ds, Learner::logreg, Hyperparameters{}, 0, flip);
    // Flipping every label negates the optimum of the symmetric objective.
    const auto& p = std::get<LinearParams>(m.params);
    const auto& q = std::get<LinearParams>(mf.params);
    EXPECT_LT((p.coef + q.coef).norm(), 1e-6);

    TrainOptions doubled;
    doubled.weights = VectorXd::Constant(400, 2.0);
    EXPECT_LT((std::get<LinearParams>(train(ds, Learner::logreg, Hyperparameters{}, 0, doubled).params).coef - p.coef).norm(), 1e-12);
}
