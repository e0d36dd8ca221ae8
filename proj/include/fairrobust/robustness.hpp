#pragma once

#include "fairrobust/fairness.hpp"
#include "fairrobust/noise.hpp"
#include "fairrobust/strategies.hpp"

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace fairrobust {

// Mean over repetitions and rows of |f(x) - f(x~)| for hard labels.
double prediction_robustness(const TrainedModel& model, const Dataset& ds, const NoiseSpec& spec, Index repetitions,
                             std::uint64_t k_index = 0);

using Predictor = std::function<VectorXi(const Dataset&)>;

struct RatioOptions {
    // Denominator floor: the clean metric is replaced by max(M, delta_floor).
    double delta_floor = 1e-6;
    std::uint64_t k_index = 0;
    PerturbOptions perturb;
};

// One repetition's contribution: 1 + (perturbed - clean) / max(clean, floor).
// Equals perturbed / clean whenever clean >= floor.
double ratio_term(double clean, double perturbed, double delta_floor);

struct RatioEstimate {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double clean = 0.0;
    // Metric per repetition; NaN where the metric was undefined.
    std::vector<double> perturbed;
    Index used = 0;
    Index discarded = 0;
    bool floor_bound = false;
};

RatioEstimate robustness_ratio(const Predictor& f, FairnessMetricId metric, const Dataset& ds, const NoiseSpec& spec,
                               Index repetitions, const RatioOptions& options = {});
RatioEstimate robustness_ratio(const FittedStrategy& f, FairnessMetricId metric, const Dataset& ds, const NoiseSpec& spec,
                               Index repetitions, Seed coin_seed, const RatioOptions& options = {});

// 0, 0.5, ..., 10.
std::vector<double> default_k_grid();

struct SweepConfig {
    std::vector<double> k_grid = default_k_grid();
    Index repetitions = 50;
    std::vector<StrategyId> strategies = all_strategies();
    std::vector<FairnessMetricId> metrics = all_metrics();
    std::vector<Learner> learners{Learner::logreg};
    // learner is overridden per entry of `learners`.
    StrategyConfig strategy;
    Seed master_seed = 0;
    double delta_floor = 1e-6;
    unsigned jobs = 1;
    double max_discard_fraction = 0.01;
    // Refit the f3 thresholds on the perturbed training set of each cell
    // instead of once on clean training data.
    bool threshold_fit_noisy = false;
};

struct RawRecord {
    StrategyId strategy = StrategyId::f0;
    FairnessMetricId metric = FairnessMetricId::dp;
    Learner learner = Learner::logreg;
    double k = 0.0;
    Index repetition = 0;
    double value = 0.0; // NaN when undefined
};

struct RobustnessCurve {
    StrategyId strategy = StrategyId::f0;
    FairnessMetricId metric = FairnessMetricId::dp;
    Learner learner = Learner::logreg;
    double clean = 0.0;
    bool floor_bound = false;
    std::vector<double> k;
    std::vector<double> ratio;
    std::vector<double> mean_metric;
    std::vector<Index> discarded;
};

struct SweepResult {
    std::vector<RawRecord> raw;
    std::vector<RobustnessCurve> curves;
    Index evaluations = 0;
    Index discarded = 0;
    bool discard_limit_exceeded = false;
};

SweepResult sweep(const Dataset& train_set, const Dataset& test_set, const SweepConfig& config);

// Min and max finite-difference slope of r(k) over grid points with k in
// [k_lo, k_hi]: one-sided at the first and last selected point, central inside.
std::pair<double, double> curve_slope(const std::vector<double>& k, const std::vector<double>& r, double k_lo, double k_hi);

enum class CurveTrend { stable, fairer, less_fair };

std::string to_string(CurveTrend trend);

// Trend of the ratio at the largest k: within +-dead_band of 1 is stable,
// below is fairer, above is less fair.
CurveTrend classify_curve(const RobustnessCurve& curve, double dead_band = 0.05);

} // namespace fairrobust
