#include "fairrobust/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace fairrobust;

int main(int argc, char** argv)
{
    CLI::App app{"Fairness robustness evaluation under input noise"};
    app.require_subcommand(1);

    CliOverrides o;
    auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("--config", o.config_path, "Config file (sectioned key=value)");
        sub->add_option("--seed", o.seed, "Master seed; overrides sweep.master_seed");
        sub->add_option("--out", o.out, "Output directory; overrides output.dir");
        if (with_jobs) {
            sub->add_option("--jobs", o.jobs, "Worker threads for the sweep")->check(CLI::PositiveNumber);
        }
    };

    auto* evaluate = app.add_subcommand("evaluate", "Fit strategies and sweep the noise grid");
    add_common(evaluate, true);

    auto* theory = app.add_subcommand("theory-check", "Run the theory validators");
    add_common(theory, false);

    auto* inspect = app.add_subcommand("inspect", "Print a dataset summary");
    inspect->add_option("--config", o.config_path, "Config file providing the [dataset] section");
    inspect->add_option("--seed", o.seed, "Seed for the synthetic generator");
    std::optional<std::string> csv;
    std::optional<std::string> schema;
    std::optional<Index> n;
    std::optional<double> bias;
    std::optional<double> ratio;
    inspect->add_option("--csv", csv, "CSV file");
    inspect->add_option("--schema", schema, "Schema file for --csv");
    inspect->add_option("--n", n, "Synthetic row count");
    inspect->add_option("--bias", bias, "Synthetic bias");
    inspect->add_option("--ratio", ratio, "Synthetic share of A=1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    return run_guarded(
        [&] {
            RunConfig config = resolve_config(o);
            if (*evaluate) {
                return cmd_evaluate(config, std::cerr);
            }
            if (*theory) {
                return cmd_theory_check(config, std::cout);
            }
            DatasetConfig dc = config.dataset;
            if (csv) {
                if (csv->empty()) {
                    throw ConfigError("--csv: empty dataset path");
                }
                dc.source = DatasetSource::csv;
                dc.csv = *csv;
                dc.schema = schema.value_or("");
                if (dc.schema.empty()) {
                    throw ConfigError("--schema: required with --csv");
                }
            }
            if (n) {
                dc.synth.n = *n;
            }
            if (bias) {
                dc.synth.bias = *bias;
            }
            if (ratio) {
                dc.synth.group_ratio = *ratio;
            }
            return cmd_inspect(dc, std::cout);
        },
        std::cerr);
}
