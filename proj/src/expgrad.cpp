#include "fairrobust/strategies.hpp"

#include <algorithm>
#include <cmath>

namespace fairrobust {

VectorXd exponentiated_update(const VectorXd& weights, const VectorXd& losses, double eta)
{
    if (weights.size() != losses.size() || weights.size() == 0) {
        throw ValidationError("exponentiated_update: weight and loss vectors must be non-empty and equal in length");
    }
    // Shift by the minimum loss so the largest factor is exactly 1.
    const double lo = losses.minCoeff();
    VectorXd w = weights.array() * (-eta * (losses.array() - lo)).exp();
    const double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw ValidationError("exponentiated_update: weights collapsed");
    }
    return w / total;
}

VectorXd admit_predictor(const VectorXd& weights)
{
    const Index k = weights.size() + 1;
    VectorXd w(k);
    w.head(k - 1) = weights * (static_cast<double>(k - 1) / static_cast<double>(k));
    w(k - 1) = 1.0 / static_cast<double>(k);
    return w;
}

namespace {

struct Cells {
    Index n = 0;
    std::array<Index, 2> by_group{};
    std::array<Index, 2> by_label{};
    std::array<std::array<Index, 2>, 2> by_cell{}; // [y][a]
};

Cells count_cells(const VectorXi& labels, const VectorXi& protected_attr)
{
    Cells c;
    c.n = labels.size();
    for (Index i = 0; i < c.n; ++i) {
        ++c.by_group[protected_attr(i)];
        ++c.by_label[labels(i)];
        ++c.by_cell[labels(i)][protected_attr(i)];
    }
    return c;
}

Index component_count(FairnessMetricId constraint)
{
    return constraint == FairnessMetricId::dp ? 4 : 8;
}

// d moment_j / d h_i for the unsigned moment of component pair j / 2.
double moment_derivative(FairnessMetricId constraint, const Cells& c, Index pair, int y, int a)
{
    if (constraint == FairnessMetricId::dp) {
        const int g = static_cast<int>(pair);
        return (a == g ? 1.0 / static_cast<double>(c.by_group[g]) : 0.0) - 1.0 / static_cast<double>(c.n);
    }
    const int yy = static_cast<int>(pair / 2);
    const int g = static_cast<int>(pair % 2);
    if (y != yy) {
        return 0.0;
    }
    return (a == g ? 1.0 / static_cast<double>(c.by_cell[yy][g]) : 0.0) - 1.0 / static_cast<double>(c.by_label[yy]);
}

void require_cells(FairnessMetricId constraint, const Cells& c)
{
    for (int a = 0; a < 2; ++a) {
        if (c.by_group[a] == 0) {
            throw UndefinedMetric("exponentiated gradient: empty protected group");
        }
        if (constraint != FairnessMetricId::dp) {
            for (int y = 0; y < 2; ++y) {
                if (c.by_cell[y][a] == 0) {
                    throw UndefinedMetric("exponentiated gradient: empty (Y, A) cell");
                }
            }
        }
    }
}

TrainedModel constant_model(const Dataset& ds, double value)
{
    TrainedModel m;
    m.learner = Learner::decision_tree;
    m.encoder = Encoder::fit(ds, false);
    TreeParams t;
    t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, value});
    m.params = std::move(t);
    return m;
}

double error_rate(const VectorXd& h, const VectorXi& labels)
{
    return (h - labels.cast<double>()).cwiseAbs().mean();
}

} // namespace

VectorXd constraint_moments(FairnessMetricId constraint, const VectorXd& h, const VectorXi& labels, const VectorXi& protected_attr)
{
    if (h.size() != labels.size() || h.size() != protected_attr.size() || h.size() == 0) {
        throw DataError("constraint_moments: input vectors differ in length");
    }
    const Cells c = count_cells(labels, protected_attr);
    require_cells(constraint, c);
    const Index pairs = component_count(constraint) / 2;
    VectorXd unsigned_moment = VectorXd::Zero(pairs);
    for (Index i = 0; i < h.size(); ++i) {
        for (Index p = 0; p < pairs; ++p) {
            unsigned_moment(p) += h(i) * moment_derivative(constraint, c, p, labels(i), protected_attr(i));
        }
    }
    VectorXd out(2 * pairs);
    for (Index p = 0; p < pairs; ++p) {
        out(2 * p) = unsigned_moment(p);
        out(2 * p + 1) = -unsigned_moment(p);
    }
    return out;
}

ExpGradState fit_expgrad(const Dataset& ds, Learner learner, const Hyperparameters& hyper, const ExpGradConfig& config, Seed seed)
{
    if (config.constraint == FairnessMetricId::fp || config.constraint == FairnessMetricId::tp) {
        throw ConfigError("exponentiated gradient: constraint must be dp or eo");
    }
    if (!(config.eps_tol > 0.0) || !(config.eta > 0.0) || config.t_max < 1 || !(config.bound > 0.0)) {
        throw ConfigError("exponentiated gradient: eps_tol, eta, bound must be positive and t_max >= 1");
    }
    const VectorXi& y = ds.labels();
    const VectorXi& a = ds.protected_attr();
    const Cells cells = count_cells(y, a);
    require_cells(config.constraint, cells);
    const Index n = ds.rows();
    const Index kc = component_count(config.constraint);
    const Index pairs = kc / 2;

    // Per-row derivative of each unsigned moment, fixed for the whole run.
    MatrixXd deriv(n, pairs);
    for (Index i = 0; i < n; ++i) {
        for (Index p = 0; p < pairs; ++p) {
            deriv(i, p) = moment_derivative(config.constraint, cells, p, y(i), a(i));
        }
    }
    const VectorXd base_cost = (1.0 - 2.0 * y.cast<double>().array()) / static_cast<double>(n);

    ExpGradState st;
    st.config = config;
    st.lambda = VectorXd::Constant(kc, config.bound / static_cast<double>(kc + 1));
    std::vector<VectorXd> pool_preds;

    auto lagrangian = [&](const VectorXd& h, const VectorXd& lambda) {
        const VectorXd g = constraint_moments(config.constraint, h, y, a).array() - config.eps_tol;
        return error_rate(h, y) + lambda.dot(g);
    };

    for (int t = 1; t <= config.t_max; ++t) {
        VectorXd net(pairs);
        for (Index p = 0; p < pairs; ++p) {
            net(p) = st.lambda(2 * p) - st.lambda(2 * p + 1);
        }
        const VectorXd cost = base_cost + deriv * net;
        VectorXi relabel = (cost.array() < 0.0).cast<int>();
        VectorXd weight = cost.cwiseAbs();
        const Index ones = relabel.sum();
        TrainedModel h;
        if (!(weight.sum() > 0.0)) {
            h = constant_model(ds, 0.0);
        } else if (ones == 0 || ones == n) {
            h = constant_model(ds, ones == n ? 1.0 : 0.0);
        } else {
            weight /= weight.mean();
            TrainOptions opt;
            opt.include_protected = false;
            opt.weights = weight;
            opt.labels = relabel;
            h = train(ds, learner, hyper, derive_seed(seed, {0xE6u, static_cast<std::uint64_t>(t)}), opt);
        }
        pool_preds.push_back(predict(h, ds).cast<double>());
        st.predictors.push_back(std::move(h));

        st.weights = admit_predictor(st.weights);
        // The Lagrangian is divided by 1 + |lambda|_1 so the step size does not
        // depend on the current dual scale.
        VectorXd losses(static_cast<Index>(pool_preds.size()));
        const double scale = 1.0 + st.lambda.sum();
        for (std::size_t i = 0; i < pool_preds.size(); ++i) {
            losses(static_cast<Index>(i)) = lagrangian(pool_preds[i], st.lambda) / scale;
        }
        st.weights = exponentiated_update(st.weights, losses, config.eta);

        VectorXd q = VectorXd::Zero(n);
        for (std::size_t i = 0; i < pool_preds.size(); ++i) {
            q += st.weights(static_cast<Index>(i)) * pool_preds[i];
        }
        const VectorXd moments = constraint_moments(config.constraint, q, y, a);
        const double max_violation = moments.maxCoeff();
        st.history.push_back(ExpGradIteration{st.weights, st.lambda, max_violation});
        if (max_violation <= config.eps_tol) {
            st.converged = true;
            break;
        }
        const VectorXd gamma = moments.array() - config.eps_tol;
        st.lambda = st.lambda.array() * (config.eta * gamma.array()).exp();
        const double total = st.lambda.sum();
        if (total > config.bound) {
            st.lambda *= config.bound / total;
        }
    }
    return st;
}

VectorXd mixture_scores(const ExpGradState& state, const Dataset& ds)
{
    VectorXd q = VectorXd::Zero(ds.rows());
    for (std::size_t i = 0; i < state.predictors.size(); ++i) {
        q += state.weights(static_cast<Index>(i)) * predict(state.predictors[i], ds).cast<double>();
    }
    return q;
}

} // namespace fairrobust
