#include "fairrobust/models.hpp"

#include "fairrobust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace fairrobust {

namespace {

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z)
{
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Encoder block name for A; "@" cannot start a schema-declared column name.
const char* kProtectedBlockName = "@protected";

} // namespace

std::string to_string(Learner learner)
{
    switch (learner) {
    case Learner::logreg: return "logreg";
    case Learner::linear_svm: return "linear_svm";
    case Learner::naive_bayes: return "naive_bayes";
    case Learner::sgd_linear: return "sgd_linear";
    case Learner::decision_tree: return "decision_tree";
    }
    return "unknown";
}

Learner parse_learner(const std::string& text)
{
    for (auto l : all_learners()) {
        if (to_string(l) == text) {
            return l;
        }
    }
    throw ConfigError("unknown learner '" + text + "'");
}

const std::vector<Learner>& all_learners()
{
    static const std::vector<Learner> learners{Learner::logreg, Learner::linear_svm, Learner::naive_bayes,
                                               Learner::sgd_linear, Learner::decision_tree};
    return learners;
}

// ---------------------------------------------------------------------------
// Encoder

Encoder Encoder::fit(const Dataset& ds, bool include_protected)
{
    std::vector<EncodedBlock> blocks;
    for (const auto& c : ds.columns()) {
        EncodedBlock b;
        b.name = c.name;
        b.kind = c.kind;
        if (c.kind == FeatureKind::continuous) {
            b.width = 1;
            b.mean = c.values.mean();
            const double var = (c.values.array() - b.mean).square().mean();
            b.scale = var > 0.0 ? std::sqrt(var) : 1.0;
        } else {
            b.categories = c.categories;
            b.width = static_cast<Index>(c.categories.size());
        }
        blocks.push_back(std::move(b));
    }
    if (include_protected) {
        EncodedBlock b;
        b.name = kProtectedBlockName;
        b.kind = FeatureKind::discrete;
        b.categories = {"0", "1"};
        b.width = 2;
        blocks.push_back(std::move(b));
    }
    return from_blocks(std::move(blocks), include_protected);
}

Encoder Encoder::from_blocks(std::vector<EncodedBlock> blocks, bool include_protected)
{
    Encoder e;
    Index offset = 0;
    for (auto& b : blocks) {
        b.offset = offset;
        b.width = b.kind == FeatureKind::continuous ? 1 : static_cast<Index>(b.categories.size());
        offset += b.width;
    }
    e.blocks_ = std::move(blocks);
    e.width_ = offset;
    e.include_protected_ = include_protected;
    return e;
}

MatrixXd Encoder::encode(const Dataset& ds) const
{
    MatrixXd x = MatrixXd::Zero(ds.rows(), width_);
    for (const auto& b : blocks_) {
        if (include_protected_ && b.name == kProtectedBlockName) {
            for (Index i = 0; i < ds.rows(); ++i) {
                x(i, b.offset + ds.protected_attr()(i)) = 1.0;
            }
            continue;
        }
        const auto j = ds.find_column(b.name);
        if (!j) {
            throw DataError("dataset lacks column '" + b.name + "' required by the model");
        }
        const auto& c = ds.column(*j);
        if (c.kind != b.kind) {
            throw DataError("column '" + b.name + "' kind differs from the model's encoding");
        }
        if (c.kind == FeatureKind::continuous) {
            x.col(b.offset) = (c.values.array() - b.mean) / b.scale;
        } else {
            // dataset code -> block category index (-1 when unseen)
            std::vector<Index> remap(c.categories.size(), -1);
            for (std::size_t k = 0; k < c.categories.size(); ++k) {
                auto it = std::find(b.categories.begin(), b.categories.end(), c.categories[k]);
                if (it != b.categories.end()) {
                    remap[k] = static_cast<Index>(it - b.categories.begin());
                }
            }
            for (Index i = 0; i < ds.rows(); ++i) {
                const Index slot = remap[static_cast<std::size_t>(c.codes(i))];
                if (slot >= 0) {
                    x(i, b.offset + slot) = 1.0;
                }
            }
        }
    }
    return x;
}

Eigen::RowVectorXd Encoder::encode_row(const FeatureRow& row) const
{
    if (static_cast<Index>(row.size()) != arity()) {
        throw DataError("row arity " + std::to_string(row.size()) + " does not match model arity " + std::to_string(arity()));
    }
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(width_);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const auto& b = blocks_[j];
        const auto& cell = row[j];
        if (b.kind == FeatureKind::continuous) {
            const double* v = std::get_if<double>(&cell);
            if (!v) {
                throw DataError("continuous cell '" + b.name + "' given a category");
            }
            x(b.offset) = (*v - b.mean) / b.scale;
        } else {
            std::string key;
            if (const auto* s = std::get_if<std::string>(&cell)) {
                key = *s;
            } else {
                const double v = std::get<double>(cell);
                key = std::to_string(static_cast<long long>(std::llround(v)));
            }
            auto it = std::find(b.categories.begin(), b.categories.end(), key);
            if (it != b.categories.end()) {
                x(b.offset + (it - b.categories.begin())) = 1.0;
            }
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Linear learners

double logistic_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const LinearParams& params, double l2,
                          VectorXd* gradient)
{
    const double wsum = w.sum();
    const VectorXd z = (x * params.coef).array() + params.intercept;
    double loss = 0.0;
    VectorXd resid(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        // -[y log s + (1-y) log(1-s)] = softplus(z) - y z
        loss += w(i) * (softplus(z(i)) - y(i) * z(i));
        resid(i) = w(i) * (sigmoid(z(i)) - y(i));
    }
    loss = loss / wsum + 0.5 * l2 * params.coef.squaredNorm();
    if (gradient) {
        gradient->resize(x.cols() + 1);
        gradient->head(x.cols()) = x.transpose() * resid / wsum + l2 * params.coef;
        (*gradient)(x.cols()) = resid.sum() / wsum;
    }
    return loss;
}

LinearParams fit_logreg(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper)
{
    LinearParams p{VectorXd::Zero(x.cols()), 0.0};
    VectorXd g;
    for (int it = 0; it < hyper.logreg_max_iter; ++it) {
        logistic_objective(x, y, w, p, hyper.logreg_l2, &g);
        if (g.norm() < hyper.logreg_tol) {
            break;
        }
        p.coef -= hyper.logreg_learning_rate * g.head(x.cols());
        p.intercept -= hyper.logreg_learning_rate * g(x.cols());
    }
    return p;
}

namespace {

double hinge_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const LinearParams& p, double l2,
                       VectorXd* gradient)
{
    const double wsum = w.sum();
    const VectorXd m = (x * p.coef).array() + p.intercept;
    double loss = 0.0;
    VectorXd coeff = VectorXd::Zero(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double s = y(i) > 0.5 ? 1.0 : -1.0;
        const double slack = 1.0 - s * m(i);
        if (slack > 0.0) {
            loss += w(i) * slack;
            coeff(i) = -w(i) * s;
        }
    }
    if (gradient) {
        gradient->resize(x.cols() + 1);
        gradient->head(x.cols()) = x.transpose() * coeff / wsum + l2 * p.coef;
        (*gradient)(x.cols()) = coeff.sum() / wsum;
    }
    return loss / wsum + 0.5 * l2 * p.coef.squaredNorm();
}

} // namespace

LinearParams fit_linear_svm(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper)
{
    LinearParams p{VectorXd::Zero(x.cols()), 0.0};
    LinearParams best = p;
    double best_obj = std::numeric_limits<double>::infinity();
    VectorXd g;
    for (int t = 1; t <= hyper.svm_epochs; ++t) {
        const double obj = hinge_objective(x, y, w, p, hyper.svm_l2, &g);
        if (obj < best_obj) {
            best_obj = obj;
            best = p;
        }
        const double step = hyper.svm_learning_rate / std::sqrt(static_cast<double>(t));
        p.coef -= step * g.head(x.cols());
        p.intercept -= step * g(x.cols());
    }
    if (hinge_objective(x, y, w, p, hyper.svm_l2, nullptr) < best_obj) {
        best = p;
    }
    return best;
}

LinearParams fit_sgd_linear(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper, Seed seed)
{
    LinearParams p{VectorXd::Zero(x.cols()), 0.0};
    const double wmean = w.mean();
    Rng rng(derive_seed(seed, {0x56Du}));
    for (int epoch = 0; epoch < hyper.sgd_epochs; ++epoch) {
        const double step = hyper.sgd_learning_rate / (1.0 + epoch);
        const auto order = random_permutation(x.rows(), rng);
        for (auto i : order) {
            const double z = x.row(i).dot(p.coef) + p.intercept;
            const double g = (w(i) / wmean) * (sigmoid(z) - y(i));
            p.coef = (1.0 - step * hyper.sgd_l2) * p.coef - step * g * x.row(i).transpose();
            p.intercept -= step * g;
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesParams fit_naive_bayes(const Encoder& encoder, const MatrixXd& x, const VectorXd& y, const VectorXd& w,
                                 const Hyperparameters& hyper)
{
    NaiveBayesParams p;
    std::array<double, 2> class_weight{0.0, 0.0};
    for (Index i = 0; i < x.rows(); ++i) {
        class_weight[y(i) > 0.5 ? 1 : 0] += w(i);
    }
    const double total = class_weight[0] + class_weight[1];
    for (int c = 0; c < 2; ++c) {
        p.log_prior[c] = std::log(class_weight[c] / total);
    }
    double max_var = 0.0;
    for (const auto& b : encoder.blocks()) {
        NaiveBayesParams::Block nb;
        if (b.kind == FeatureKind::continuous) {
            for (int c = 0; c < 2; ++c) {
                double sw = 0.0, s1 = 0.0;
                for (Index i = 0; i < x.rows(); ++i) {
                    if ((y(i) > 0.5) == (c == 1)) {
                        sw += w(i);
                        s1 += w(i) * x(i, b.offset);
                    }
                }
                const double mean = s1 / sw;
                double s2 = 0.0;
                for (Index i = 0; i < x.rows(); ++i) {
                    if ((y(i) > 0.5) == (c == 1)) {
                        s2 += w(i) * (x(i, b.offset) - mean) * (x(i, b.offset) - mean);
                    }
                }
                nb.mean[c] = mean;
                nb.var[c] = s2 / sw;
                max_var = std::max(max_var, nb.var[c]);
            }
        } else {
            for (int c = 0; c < 2; ++c) {
                std::vector<double> counts(static_cast<std::size_t>(b.width), hyper.nb_alpha);
                double sum = hyper.nb_alpha * static_cast<double>(b.width);
                for (Index i = 0; i < x.rows(); ++i) {
                    if ((y(i) > 0.5) != (c == 1)) {
                        continue;
                    }
                    for (Index k = 0; k < b.width; ++k) {
                        if (x(i, b.offset + k) > 0.5) {
                            counts[static_cast<std::size_t>(k)] += w(i);
                            sum += w(i);
                        }
                    }
                }
                nb.log_prob[c].resize(counts.size());
                for (std::size_t k = 0; k < counts.size(); ++k) {
                    nb.log_prob[c][k] = std::log(counts[k] / sum);
                }
            }
        }
        p.blocks.push_back(std::move(nb));
    }
    const double eps = hyper.nb_var_smoothing * std::max(max_var, 1.0);
    for (std::size_t j = 0; j < p.blocks.size(); ++j) {
        if (encoder.blocks()[j].kind == FeatureKind::continuous) {
            for (int c = 0; c < 2; ++c) {
                p.blocks[j].var[c] += eps;
            }
        }
    }
    return p;
}

namespace {

double naive_bayes_score(const Encoder& encoder, const NaiveBayesParams& p, const Eigen::Ref<const Eigen::RowVectorXd>& x)
{
    std::array<double, 2> logp = p.log_prior;
    for (std::size_t j = 0; j < p.blocks.size(); ++j) {
        const auto& b = encoder.blocks()[j];
        const auto& nb = p.blocks[j];
        if (b.kind == FeatureKind::continuous) {
            const double v = x(b.offset);
            for (int c = 0; c < 2; ++c) {
                const double d = v - nb.mean[c];
                logp[c] += -0.5 * std::log(2.0 * M_PI * nb.var[c]) - 0.5 * d * d / nb.var[c];
            }
        } else {
            for (Index k = 0; k < b.width; ++k) {
                if (x(b.offset + k) > 0.5) {
                    for (int c = 0; c < 2; ++c) {
                        logp[c] += nb.log_prob[c][static_cast<std::size_t>(k)];
                    }
                    break;
                }
            }
        }
    }
    return sigmoid(logp[1] - logp[0]);
}

// ---------------------------------------------------------------------------
// Decision tree

struct TreeBuilder {
    const MatrixXd& x;
    const VectorXd& y;
    const VectorXd& w;
    const Hyperparameters& hyper;
    std::vector<TreeNode> nodes;

    static double gini(double pos, double total)
    {
        if (total <= 0.0) {
            return 0.0;
        }
        const double p = pos / total;
        return 2.0 * p * (1.0 - p);
    }

    Index build(std::vector<Index>& rows, int depth)
    {
        double total = 0.0, pos = 0.0;
        for (auto i : rows) {
            total += w(i);
            pos += w(i) * y(i);
        }
        const Index id = static_cast<Index>(nodes.size());
        nodes.push_back(TreeNode{-1, 0.0, -1, -1, total > 0.0 ? pos / total : 0.5});
        const auto n = static_cast<Index>(rows.size());
        const Index min_leaf = std::max<Index>(1, hyper.tree_min_samples_leaf);
        if (depth >= hyper.tree_max_depth || pos <= 0.0 || pos >= total || n < 2 * min_leaf) {
            return id;
        }
        const double parent = gini(pos, total) * total;
        double best_gain = -1.0;
        Index best_feature = -1;
        double best_threshold = 0.0;
        std::vector<Index> sorted(rows);
        for (Index f = 0; f < x.cols(); ++f) {
            std::sort(sorted.begin(), sorted.end(), [&](Index a, Index b) {
                return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
            });
            double lw = 0.0, lp = 0.0;
            for (Index r = 0; r + 1 < n; ++r) {
                const Index i = sorted[static_cast<std::size_t>(r)];
                lw += w(i);
                lp += w(i) * y(i);
                const double cur = x(i, f);
                const double next = x(sorted[static_cast<std::size_t>(r + 1)], f);
                if (cur == next || r + 1 < min_leaf || n - (r + 1) < min_leaf) {
                    continue;
                }
                const double gain = parent - gini(lp, lw) * lw - gini(pos - lp, total - lw) * (total - lw);
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (cur + next);
                }
            }
        }
        if (best_feature < 0) {
            return id;
        }
        std::vector<Index> left, right;
        for (auto i : rows) {
            (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();
        const Index l = build(left, depth + 1);
        const Index r = build(right, depth + 1);
        nodes[static_cast<std::size_t>(id)].feature = best_feature;
        nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

double tree_score(const TreeParams& t, const Eigen::Ref<const Eigen::RowVectorXd>& x)
{
    Index node = 0;
    while (t.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = t.nodes[static_cast<std::size_t>(node)];
        node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return t.nodes[static_cast<std::size_t>(node)].value;
}

} // namespace

TreeParams fit_decision_tree(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper)
{
    TreeBuilder builder{x, y, w, hyper, {}};
    std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    builder.build(rows, 0);
    return TreeParams{std::move(builder.nodes)};
}

// ---------------------------------------------------------------------------

TrainedModel train(const Dataset& ds, Learner learner, const Hyperparameters& hyper, Seed seed, const TrainOptions& options)
{
    VectorXi labels = options.labels ? *options.labels : ds.labels();
    if (labels.size() != ds.rows()) {
        throw DataError("label override length differs from dataset rows");
    }
    VectorXd w = options.weights ? *options.weights : VectorXd::Ones(ds.rows());
    if (w.size() != ds.rows() || (w.array() < 0.0).any() || !(w.sum() > 0.0)) {
        throw DataError("sample weights must be non-negative, not all zero, one per row");
    }
    double w0 = 0.0, w1 = 0.0;
    for (Index i = 0; i < ds.rows(); ++i) {
        (labels(i) == 1 ? w1 : w0) += w(i);
    }
    if (w0 <= 0.0 || w1 <= 0.0) {
        throw DataError("degenerate training set: a single label value");
    }
    TrainedModel model;
    model.learner = learner;
    model.encoder = Encoder::fit(ds, options.include_protected);
    const MatrixXd x = model.encoder.encode(ds);
    const VectorXd y = labels.cast<double>();
    switch (learner) {
    case Learner::logreg: model.params = fit_logreg(x, y, w, hyper); break;
    case Learner::linear_svm: model.params = fit_linear_svm(x, y, w, hyper); break;
    case Learner::sgd_linear: model.params = fit_sgd_linear(x, y, w, hyper, seed); break;
    case Learner::naive_bayes: model.params = fit_naive_bayes(model.encoder, x, y, w, hyper); break;
    case Learner::decision_tree: model.params = fit_decision_tree(x, y, w, hyper); break;
    }
    return model;
}

VectorXd score_encoded(const TrainedModel& model, const MatrixXd& x)
{
    VectorXd s(x.rows());
    if (const auto* lin = std::get_if<LinearParams>(&model.params)) {
        const VectorXd z = (x * lin->coef).array() + lin->intercept;
        for (Index i = 0; i < x.rows(); ++i) {
            s(i) = sigmoid(z(i));
        }
    } else if (const auto* nb = std::get_if<NaiveBayesParams>(&model.params)) {
        for (Index i = 0; i < x.rows(); ++i) {
            s(i) = naive_bayes_score(model.encoder, *nb, x.row(i));
        }
    } else {
        const auto& tree = std::get<TreeParams>(model.params);
        for (Index i = 0; i < x.rows(); ++i) {
            s(i) = tree_score(tree, x.row(i));
        }
    }
    return s;
}

VectorXd scores(const TrainedModel& model, const Dataset& ds)
{
    return score_encoded(model, model.encoder.encode(ds));
}

double score(const TrainedModel& model, const FeatureRow& row)
{
    const MatrixXd x = model.encoder.encode_row(row);
    return score_encoded(model, x)(0);
}

int predict(const TrainedModel& model, const FeatureRow& row)
{
    return label_from_score(score(model, row));
}

VectorXi predict(const TrainedModel& model, const Dataset& ds)
{
    const VectorXd s = scores(model, ds);
    VectorXi out(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        out(i) = label_from_score(s(i));
    }
    return out;
}

FeatureRow input_row(const TrainedModel& model, const Dataset& ds, Index i)
{
    FeatureRow row;
    for (const auto& b : model.encoder.blocks()) {
        if (model.encoder.includes_protected() && b.name == kProtectedBlockName) {
            row.emplace_back(static_cast<double>(ds.protected_attr()(i)));
            continue;
        }
        const auto j = ds.find_column(b.name);
        if (!j) {
            throw DataError("dataset lacks column '" + b.name + "' required by the model");
        }
        const auto& c = ds.column(*j);
        if (c.kind == FeatureKind::continuous) {
            row.emplace_back(c.values(i));
        } else {
            row.emplace_back(c.categories[static_cast<std::size_t>(c.codes(i))]);
        }
    }
    return row;
}

} // namespace fairrobust
