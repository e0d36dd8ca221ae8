#pragma once

#include "fairrobust/dataset.hpp"
#include "fairrobust/fairness.hpp"
#include "fairrobust/models.hpp"
#include "fairrobust/noise.hpp"

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace fairrobust {

// ---------------------------------------------------------------------------
// Pre-processing: least-squares correlation removal.

struct RemovedColumn {
    std::string source;   // original column name
    std::string category; // empty for continuous sources, else the one-hot category
    double beta = 0.0;
    bool operator==(const RemovedColumn&) const = default;
};

// Each output column is Z_i - (A - mean(A)) * beta_i, where beta_i is the
// least-squares coefficient of Z_i on the centred protected attribute.
// Discrete columns are expanded to one indicator column per category first.
struct CorrelationRemover {
    double protected_mean = 0.0;
    std::vector<RemovedColumn> columns;
    bool operator==(const CorrelationRemover&) const = default;
};

CorrelationRemover fit_correlation_remover(const Dataset& ds);
// Output holds only continuous residual columns (A is kept in its own slot).
Dataset transform(const CorrelationRemover& cr, const Dataset& ds);

// ---------------------------------------------------------------------------
// In-processing: exponentiated-gradient reduction.

struct ExpGradConfig {
    FairnessMetricId constraint = FairnessMetricId::dp;
    double eps_tol = 0.01;
    double eta = 2.0;
    int t_max = 50;
    // Ceiling on the l1 norm of the dual weights.
    double bound = 100.0;
};

struct ExpGradIteration {
    VectorXd weights;
    VectorXd lambda;
    double max_violation = 0.0;
};

struct ExpGradState {
    ExpGradConfig config;
    std::vector<TrainedModel> predictors;
    VectorXd weights;
    VectorXd lambda;
    bool converged = false;
    std::vector<ExpGradIteration> history;
};

// One multiplicative-weights step: w_i <- w_i exp(-eta loss_i), renormalized.
VectorXd exponentiated_update(const VectorXd& weights, const VectorXd& losses, double eta);
// Appends a new predictor with weight 1/K and scales the rest by (K-1)/K.
VectorXd admit_predictor(const VectorXd& weights);

// Signed moment per constraint component, for binary predictions h.
// dp: for a in {0,1}: E[h | A=a] - E[h]
// eo: for y, a in {0,1}: E[h | Y=y, A=a] - E[h | Y=y]
// Components are returned as (+moment, -moment) pairs.
VectorXd constraint_moments(FairnessMetricId constraint, const VectorXd& h, const VectorXi& labels, const VectorXi& protected_attr);

ExpGradState fit_expgrad(const Dataset& ds, Learner learner, const Hyperparameters& hyper, const ExpGradConfig& config, Seed seed);

// P{Q(x) = 1} = sum_i w_i h_i(x) for the fitted mixture Q.
VectorXd mixture_scores(const ExpGradState& state, const Dataset& ds);

// ---------------------------------------------------------------------------
// Post-processing: group-specific randomized thresholds.

// P{F=1 | s, A=a} = p1 [s > t1] + p0 [s >= t0] with t0 <= t1 and p0 + p1 = 1:
// 1 above t1, p0 on [t0, t1], 0 below t0. A plain threshold t is
// t0 = t1 = t, p1 = 1, p0 = 0.
struct GroupThresholds {
    double t0 = 0.5;
    double t1 = 0.5;
    double p0 = 0.0;
    double p1 = 1.0;
    bool operator==(const GroupThresholds&) const = default;
};

struct ThresholdPolicy {
    FairnessMetricId constraint = FairnessMetricId::eo;
    std::array<GroupThresholds, 2> groups;
    TrainedModel model;
};

double positive_probability(const GroupThresholds& g, double score);
int randomized_predict(const GroupThresholds& g, double score, double uniform);
int randomized_predict(const ThresholdPolicy& policy, const FeatureRow& row, int a, NoiseStream& stream);

// Uniform coin for row i, a pure function of (seed, i).
double row_coin(Seed seed, Index i);

// P{F=1} for every row given scores and the group each row is routed by.
VectorXd positive_probabilities(const ThresholdPolicy& policy, const VectorXd& scores, const VectorXi& groups);
VectorXi randomized_predict(const ThresholdPolicy& policy, const VectorXd& scores, const VectorXi& groups, Seed coin_seed);

ThresholdPolicy fit_threshold_optimizer(const TrainedModel& model, const Dataset& ds, FairnessMetricId constraint);
// Same, from precomputed scores.
ThresholdPolicy fit_threshold_optimizer(const VectorXd& scores, const VectorXi& labels, const VectorXi& protected_attr,
                                        FairnessMetricId constraint);

// One line per group: "a T0 T1 p0 p1", 17 significant digits.
std::string format_policy(const ThresholdPolicy& policy);
std::array<GroupThresholds, 2> parse_policy(const std::string& text);

// ---------------------------------------------------------------------------
// Strategy front end.

enum class StrategyId { f0, f1, f2, f3 };

std::string to_string(StrategyId id);
StrategyId parse_strategy(const std::string& text);
const std::vector<StrategyId>& all_strategies();

// dp is enforced as dp; eo, fp and tp are enforced through eo.
FairnessMetricId constraint_for(FairnessMetricId metric);

struct StrategyConfig {
    Learner learner = Learner::logreg;
    Hyperparameters hyper;
    ExpGradConfig expgrad;
    Seed seed = 0;
};

struct CorrelationPipeline {
    CorrelationRemover remover;
    TrainedModel model;
};

struct FittedStrategy {
    StrategyId id = StrategyId::f0;
    FairnessMetricId constraint = FairnessMetricId::dp;
    std::variant<TrainedModel, CorrelationPipeline, ExpGradState, ThresholdPolicy> fitted;
};

TrainedModel fit_baseline(const Dataset& ds, Learner learner, const Hyperparameters& hyper, Seed seed);

FittedStrategy fit_strategy(StrategyId id, const Dataset& train, FairnessMetricId constraint, const StrategyConfig& config);

// Hard predictions. Randomized strategies draw one coin per row from coin_seed,
// so identical inputs give identical outputs.
VectorXi predict(const FittedStrategy& strategy, const Dataset& ds, Seed coin_seed);

} // namespace fairrobust
