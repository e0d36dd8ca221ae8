#pragma once

#include "fairrobust/dataset.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fairrobust {

enum class Learner { logreg, linear_svm, naive_bayes, sgd_linear, decision_tree };

std::string to_string(Learner learner);
Learner parse_learner(const std::string& text);
const std::vector<Learner>& all_learners();

// Fixed default hyperparameters. These are artifact choices and are echoed
// into every run summary so results can be reproduced.
struct Hyperparameters {
    // logreg: full-batch gradient descent on weighted log-loss + L2.
    double logreg_learning_rate = 0.5;
    int logreg_max_iter = 500;
    double logreg_tol = 1e-6;
    double logreg_l2 = 1e-4;
    // linear_svm: full-batch subgradient descent on hinge + L2, step lr / sqrt(t).
    double svm_learning_rate = 0.5;
    int svm_epochs = 300;
    double svm_l2 = 1e-3;
    // sgd_linear: per-sample log-loss updates, step lr / (1 + epoch).
    double sgd_learning_rate = 0.05;
    int sgd_epochs = 5;
    double sgd_l2 = 1e-4;
    // naive_bayes
    double nb_alpha = 1.0;
    double nb_var_smoothing = 1e-9;
    // decision_tree: greedy weighted Gini.
    int tree_max_depth = 6;
    Index tree_min_samples_leaf = 5;
};

// One input cell's slot in the encoded vector. Continuous cells are z-scored
// with training statistics; discrete cells are one-hot expanded, and an unseen
// category encodes to an all-zeros block.
struct EncodedBlock {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    Index offset = 0;
    Index width = 1;
    double mean = 0.0;
    double scale = 1.0;
    std::vector<std::string> categories;
    bool operator==(const EncodedBlock&) const = default;
};

class Encoder {
public:
    // When include_protected is set, A is appended as a discrete {0,1} input
    // after the dataset's feature columns.
    static Encoder fit(const Dataset& ds, bool include_protected);

    Index width() const { return width_; }
    Index arity() const { return static_cast<Index>(blocks_.size()); }
    bool includes_protected() const { return include_protected_; }
    const std::vector<EncodedBlock>& blocks() const { return blocks_; }

    MatrixXd encode(const Dataset& ds) const;
    Eigen::RowVectorXd encode_row(const FeatureRow& row) const;

    static Encoder from_blocks(std::vector<EncodedBlock> blocks, bool include_protected);
    bool operator==(const Encoder&) const = default;

private:
    std::vector<EncodedBlock> blocks_;
    Index width_ = 0;
    bool include_protected_ = false;
};

struct LinearParams {
    VectorXd coef;
    double intercept = 0.0;
    bool operator==(const LinearParams&) const = default;
};

struct NaiveBayesParams {
    std::array<double, 2> log_prior{};
    // Per encoder block: Gaussian (mean, var) per class for continuous blocks,
    // log category probabilities per class for discrete blocks.
    struct Block {
        std::array<double, 2> mean{};
        std::array<double, 2> var{};
        std::array<std::vector<double>, 2> log_prob;
        bool operator==(const Block&) const = default;
    };
    std::vector<Block> blocks;
    bool operator==(const NaiveBayesParams&) const = default;
};

struct TreeNode {
    // feature < 0 marks a leaf. Rows with x[feature] <= threshold go left.
    Index feature = -1;
    double threshold = 0.0;
    Index left = -1;
    Index right = -1;
    double value = 0.5;
    bool operator==(const TreeNode&) const = default;
};

struct TreeParams {
    std::vector<TreeNode> nodes;
    bool operator==(const TreeParams&) const = default;
};

using ModelParams = std::variant<LinearParams, NaiveBayesParams, TreeParams>;

// A fitted scorer f_s: rows -> [0, 1], with hard label [score >= 0.5].
struct TrainedModel {
    Learner learner = Learner::logreg;
    Encoder encoder;
    ModelParams params;
    bool operator==(const TrainedModel&) const = default;
};

struct ScoreRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct TrainOptions {
    bool include_protected = true;
    // Per-row sample weights (non-negative, not all zero); default uniform.
    std::optional<VectorXd> weights;
    // Replaces the dataset's labels for this fit.
    std::optional<VectorXi> labels;
};

TrainedModel train(const Dataset& ds, Learner learner, const Hyperparameters& hyper, Seed seed, const TrainOptions& options = {});

// Learners on an already-encoded design matrix. y holds 0/1 values.
LinearParams fit_logreg(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper);
LinearParams fit_linear_svm(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper);
LinearParams fit_sgd_linear(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper, Seed seed);
NaiveBayesParams fit_naive_bayes(const Encoder& encoder, const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper);
TreeParams fit_decision_tree(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const Hyperparameters& hyper);

// Weighted mean log-loss plus (l2/2)|coef|^2, and its gradient with respect
// to (coef, intercept); the intercept is the last gradient entry.
double logistic_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& w, const LinearParams& params, double l2,
                          VectorXd* gradient = nullptr);

// Scores for every row of an encoded matrix.
VectorXd score_encoded(const TrainedModel& model, const MatrixXd& x);

// Scores for every row of ds; A is read from ds when the model uses it.
VectorXd scores(const TrainedModel& model, const Dataset& ds);

// Row-level scoring. The row must match the encoder arity; for models that use
// A, the final cell is the protected value (0/1 as a number or string).
double score(const TrainedModel& model, const FeatureRow& row);
int predict(const TrainedModel& model, const FeatureRow& row);
VectorXi predict(const TrainedModel& model, const Dataset& ds);

// The input row the model expects for row i of ds.
FeatureRow input_row(const TrainedModel& model, const Dataset& ds, Index i);

inline int label_from_score(double s) { return s >= 0.5 ? 1 : 0; }

// Text serialization: one key=value per line, reals at 17 significant digits.
void save_model(const TrainedModel& model, std::ostream& out);
TrainedModel load_model(std::istream& in);
std::string format_model(const TrainedModel& model);
TrainedModel parse_model(const std::string& text);

} // namespace fairrobust
