#include "fairrobust/robustness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace fairrobust {

double prediction_robustness(const TrainedModel& model, const Dataset& ds, const NoiseSpec& spec, Index repetitions,
                             std::uint64_t k_index)
{
    if (repetitions < 1) {
        throw ConfigError("prediction_robustness: K must be at least 1");
    }
    const VectorXi clean = predict(model, ds);
    double flips = 0.0;
    for (Index j = 0; j < repetitions; ++j) {
        const Dataset noisy = perturb_dataset(ds, spec, NoiseCell{k_index, static_cast<std::uint64_t>(j)});
        flips += static_cast<double>((predict(model, noisy) - clean).cwiseAbs().sum());
    }
    return flips / (static_cast<double>(repetitions) * static_cast<double>(ds.rows()));
}

double ratio_term(double clean, double perturbed, double delta_floor)
{
    return 1.0 + (perturbed - clean) / std::max(clean, delta_floor);
}

RatioEstimate robustness_ratio(const Predictor& f, FairnessMetricId metric_id, const Dataset& ds, const NoiseSpec& spec,
                               Index repetitions, const RatioOptions& options)
{
    if (repetitions < 1) {
        throw ConfigError("robustness_ratio: K must be at least 1");
    }
    RatioEstimate est;
    est.clean = metric(metric_id, f(ds), ds.labels(), ds.protected_attr());
    est.floor_bound = est.clean < options.delta_floor;
    double sum = 0.0;
    for (Index j = 0; j < repetitions; ++j) {
        const Dataset noisy = perturb_dataset(ds, spec, NoiseCell{options.k_index, static_cast<std::uint64_t>(j)}, options.perturb);
        try {
            const double m = metric(metric_id, f(noisy), noisy.labels(), noisy.protected_attr());
            est.perturbed.push_back(m);
            sum += ratio_term(est.clean, m, options.delta_floor);
            ++est.used;
        } catch (const UndefinedMetric&) {
            est.perturbed.push_back(std::numeric_limits<double>::quiet_NaN());
            ++est.discarded;
        }
    }
    if (est.used > 0) {
        est.ratio = sum / static_cast<double>(est.used);
    }
    return est;
}

RatioEstimate robustness_ratio(const FittedStrategy& f, FairnessMetricId metric_id, const Dataset& ds, const NoiseSpec& spec,
                               Index repetitions, Seed coin_seed, const RatioOptions& options)
{
    return robustness_ratio([&](const Dataset& d) { return predict(f, d, coin_seed); }, metric_id, ds, spec, repetitions, options);
}

std::vector<double> default_k_grid()
{
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(0.5 * i);
    }
    return grid;
}

namespace {

// One fitted predictor and the metrics read off its predictions.
struct Evaluated {
    Learner learner;
    StrategyId strategy;
    FittedStrategy fitted;
    std::vector<FairnessMetricId> metrics;
};

void validate(const SweepConfig& cfg)
{
    if (cfg.repetitions < 1) {
        throw ConfigError("sweep: K must be at least 1");
    }
    if (cfg.k_grid.empty() || cfg.k_grid.front() != 0.0) {
        throw ConfigError("sweep: k grid must start at 0");
    }
    for (std::size_t i = 1; i < cfg.k_grid.size(); ++i) {
        if (!(cfg.k_grid[i] > cfg.k_grid[i - 1])) {
            throw ConfigError("sweep: k grid must be strictly increasing");
        }
    }
    if (cfg.strategies.empty() || cfg.metrics.empty() || cfg.learners.empty()) {
        throw ConfigError("sweep: strategies, metrics and learners must be non-empty");
    }
    if (!(cfg.delta_floor > 0.0)) {
        throw ConfigError("sweep: delta_floor must be positive");
    }
}

} // namespace

SweepResult sweep(const Dataset& train_set, const Dataset& test_set, const SweepConfig& cfg)
{
    validate(cfg);
    const Seed coin_seed = derive_seed(cfg.master_seed, {0xC0u});

    // Fit every (learner, strategy, constraint) once on clean training data.
    std::vector<Evaluated> evals;
    for (Learner learner : cfg.learners) {
        StrategyConfig sc = cfg.strategy;
        sc.learner = learner;
        sc.seed = derive_seed(cfg.master_seed, {0x5471u, static_cast<std::uint64_t>(learner)});
        for (StrategyId s : cfg.strategies) {
            std::map<FairnessMetricId, std::vector<FairnessMetricId>> by_constraint;
            for (FairnessMetricId m : cfg.metrics) {
                const bool constrained = s == StrategyId::f2 || s == StrategyId::f3;
                by_constraint[constrained ? constraint_for(m) : FairnessMetricId::dp].push_back(m);
            }
            for (auto& [constraint, metrics] : by_constraint) {
                evals.push_back(Evaluated{learner, s, fit_strategy(s, train_set, constraint, sc), metrics});
            }
        }
    }

    const std::size_t nk = cfg.k_grid.size();
    const auto reps = static_cast<std::size_t>(cfg.repetitions);
    // values[e][m][k * reps + j]
    std::vector<std::vector<std::vector<double>>> values(evals.size());
    for (std::size_t e = 0; e < evals.size(); ++e) {
        values[e].assign(evals[e].metrics.size(), std::vector<double>(nk * reps, 0.0));
    }

    auto evaluate_cell = [&](std::size_t cell) {
        const std::size_t ki = cell / reps;
        const std::size_t j = cell % reps;
        const NoiseSpec spec{cfg.k_grid[ki], cfg.master_seed};
        const NoiseCell nc{ki, j};
        const Dataset noisy = perturb_dataset(test_set, spec, nc);
        std::optional<Dataset> noisy_train;
        for (std::size_t e = 0; e < evals.size(); ++e) {
            const FittedStrategy* fitted = &evals[e].fitted;
            FittedStrategy refit;
            if (cfg.threshold_fit_noisy && evals[e].strategy == StrategyId::f3) {
                if (!noisy_train) {
                    // Training perturbations use their own column streams.
                    noisy_train = perturb_dataset(train_set, NoiseSpec{spec.k, derive_seed(cfg.master_seed, {0x7241u})}, nc);
                }
                const auto& base = std::get<ThresholdPolicy>(fitted->fitted);
                refit = *fitted;
                refit.fitted = fit_threshold_optimizer(base.model, *noisy_train, fitted->constraint);
                fitted = &refit;
            }
            const VectorXi preds = predict(*fitted, noisy, coin_seed);
            const GroupRates gr = group_rates(preds, noisy.labels(), noisy.protected_attr());
            for (std::size_t m = 0; m < evals[e].metrics.size(); ++m) {
                double v = std::numeric_limits<double>::quiet_NaN();
                try {
                    v = metric(evals[e].metrics[m], gr);
                } catch (const UndefinedMetric&) {
                }
                values[e][m][ki * reps + j] = v;
            }
        }
    };
    // Failures keep their category and name the grid cell.
    auto run_cell = [&](std::size_t cell) {
        const std::string where = " (k=" + std::to_string(cfg.k_grid[cell / reps]) + ", repetition=" + std::to_string(cell % reps) + ")";
        try {
            evaluate_cell(cell);
        } catch (const ConfigError& e) {
            throw ConfigError(e.what() + where);
        } catch (const DataError& e) {
            throw DataError(e.what() + where);
        } catch (const ValidationError& e) {
            throw ValidationError(e.what() + where);
        }
    };

    const std::size_t cells = nk * reps;
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cells)));
    if (jobs == 1) {
        for (std::size_t c = 0; c < cells; ++c) {
            run_cell(c);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < cells; c = next++) {
                    try {
                        run_cell(c);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    // Aggregate in fixed grid order.
    SweepResult result;
    for (std::size_t e = 0; e < evals.size(); ++e) {
        for (std::size_t m = 0; m < evals[e].metrics.size(); ++m) {
            const auto& v = values[e][m];
            RobustnessCurve curve;
            curve.strategy = evals[e].strategy;
            curve.metric = evals[e].metrics[m];
            curve.learner = evals[e].learner;
            curve.k = cfg.k_grid;
            // The clean metric is the k = 0 value, which is identical in every repetition.
            curve.clean = v[0];
            if (std::isnan(curve.clean)) {
                throw UndefinedMetric("sweep: metric " + to_string(curve.metric) + " undefined on the clean test set for strategy " +
                                      to_string(curve.strategy));
            }
            curve.floor_bound = curve.clean < cfg.delta_floor;
            for (std::size_t ki = 0; ki < nk; ++ki) {
                double sum_r = 0.0;
                double sum_m = 0.0;
                Index used = 0;
                Index dropped = 0;
                for (std::size_t j = 0; j < reps; ++j) {
                    const double x = v[ki * reps + j];
                    result.raw.push_back(RawRecord{curve.strategy, curve.metric, curve.learner, cfg.k_grid[ki], static_cast<Index>(j), x});
                    if (std::isnan(x)) {
                        ++dropped;
                        continue;
                    }
                    sum_r += ratio_term(curve.clean, x, cfg.delta_floor);
                    sum_m += x;
                    ++used;
                }
                const double nan = std::numeric_limits<double>::quiet_NaN();
                curve.ratio.push_back(used ? sum_r / static_cast<double>(used) : nan);
                curve.mean_metric.push_back(used ? sum_m / static_cast<double>(used) : nan);
                curve.discarded.push_back(dropped);
                result.evaluations += static_cast<Index>(reps);
                result.discarded += dropped;
            }
            result.curves.push_back(std::move(curve));
        }
    }
    result.discard_limit_exceeded =
        static_cast<double>(result.discarded) > cfg.max_discard_fraction * static_cast<double>(result.evaluations);
    return result;
}

std::pair<double, double> curve_slope(const std::vector<double>& k, const std::vector<double>& r, double k_lo, double k_hi)
{
    if (k.size() != r.size()) {
        throw ValidationError("curve_slope: grid and curve differ in length");
    }
    if (k.empty() || !(k_lo < k_hi) || k_lo < k.front() || k_hi > k.back()) {
        throw ValidationError("curve_slope: window outside grid");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] >= k_lo && k[i] <= k_hi) {
            idx.push_back(i);
        }
    }
    if (idx.size() < 2) {
        throw ValidationError("curve_slope: window holds fewer than two grid points");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t p = 0; p < idx.size(); ++p) {
        const std::size_t a = idx[p == 0 ? p : p - 1];
        const std::size_t b = idx[p + 1 == idx.size() ? p : p + 1];
        const double s = (r[b] - r[a]) / (k[b] - k[a]);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {lo, hi};
}

std::string to_string(CurveTrend trend)
{
    switch (trend) {
    case CurveTrend::stable: return "stable";
    case CurveTrend::fairer: return "fairer";
    case CurveTrend::less_fair: return "less_fair";
    }
    return "unknown";
}

CurveTrend classify_curve(const RobustnessCurve& curve, double dead_band)
{
    if (curve.ratio.empty()) {
        throw ValidationError("classify_curve: empty curve");
    }
    const double r = curve.ratio.back();
    if (r > 1.0 + dead_band) {
        return CurveTrend::less_fair;
    }
    if (r < 1.0 - dead_band) {
        return CurveTrend::fairer;
    }
    return CurveTrend::stable;
}

} // namespace fairrobust
