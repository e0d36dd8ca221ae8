#pragma once

#include "fairrobust/config.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace fairrobust {

enum ExitCode : int {
    exit_ok = 0,
    exit_other = 1,
    exit_config = 2,
    exit_data = 3,
    exit_validation = 4,
};

// Command-line overrides applied on top of a config file (or the defaults).
struct CliOverrides {
    std::optional<std::string> config_path;
    std::optional<Seed> seed;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
};

RunConfig resolve_config(const CliOverrides& overrides);

// Runs body, mapping exceptions to exit codes and printing a one-line JSON
// error report on err.
int run_guarded(const std::function<int()>& body, std::ostream& err);

// Writes fairness.csv, robustness.csv and summary.json into config.output_dir.
int cmd_evaluate(const RunConfig& config, std::ostream& log);

// Runs every theory validator, writes theory.json into config.output_dir and
// echoes the report on out. Returns exit_validation if any validator fails.
int cmd_theory_check(const RunConfig& config, std::ostream& out);

// Prints N, D, column kinds, group/label counts and base rates.
int cmd_inspect(const DatasetConfig& config, std::ostream& out);

} // namespace fairrobust
