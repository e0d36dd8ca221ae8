#pragma once

#include "fairrobust/dataset.hpp"
#include "fairrobust/models.hpp"
#include "fairrobust/robustness.hpp"
#include "fairrobust/strategies.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fairrobust {

enum class DatasetSource { synthetic, csv };

struct DatasetConfig {
    DatasetSource source = DatasetSource::synthetic;
    std::string csv;
    std::string schema;
    SynthParams synth;
    double train_fraction = 0.7;
    bool balance = false;
};

struct TheoryConfig {
    // Closed form vs quadrature agreement.
    double tolerance = 1e-6;
    // Final D_B value on the convergence grid.
    double convergence_tolerance = 1e-4;
    // Analytic checks (closed-form constants, phi^2 integral, worked examples).
    double analytic_tolerance = 1e-9;
    Index monte_carlo_n = 1000000;
    double monte_carlo_tolerance = 0.002;
};

// Everything a run needs; parsed from the sectioned key=value format.
struct RunConfig {
    DatasetConfig dataset;
    std::vector<Learner> learners{Learner::logreg};
    Hyperparameters hyper;
    std::vector<StrategyId> strategies = all_strategies();
    std::vector<FairnessMetricId> metrics = all_metrics();
    std::vector<double> k_grid = default_k_grid();
    Index repetitions = 50;
    double delta_floor = 1e-6;
    Seed master_seed = 0;
    unsigned jobs = 1;
    ExpGradConfig expgrad;
    bool threshold_fit_noisy = false;
    TheoryConfig theory;
    std::string output_dir = "out";
};

// Throws ConfigError naming the offending section.key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every key in a fixed order, reals at 17 significant digits.
// parse_config(format_config(c)) reproduces c exactly.
std::string format_config(const RunConfig& config);

// FNV-1a 64 of the canonical form with jobs and output.dir reset, as 16 hex digits.
std::string config_hash(const RunConfig& config);

SweepConfig sweep_config(const RunConfig& config);

// Loads or generates the dataset and applies balancing.
Dataset load_dataset(const DatasetConfig& config);

} // namespace fairrobust
