#include "fairrobust/cli.hpp"

#include "fairrobust/theory.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fairrobust {

using nlohmann::json;

namespace {

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Writes to a temporary sibling and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& content)
{
    const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw DataError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        if (!out) {
            throw DataError("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string header_comment(const RunConfig& config)
{
    return "# config_hash=" + config_hash(config) + " master_seed=" + std::to_string(config.master_seed) + "\n";
}

json json_number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json hyper_json(const Hyperparameters& h)
{
    return json{{"logreg_learning_rate", h.logreg_learning_rate}, {"logreg_max_iter", h.logreg_max_iter},
                {"logreg_tol", h.logreg_tol},                     {"logreg_l2", h.logreg_l2},
                {"svm_learning_rate", h.svm_learning_rate},       {"svm_epochs", h.svm_epochs},
                {"svm_l2", h.svm_l2},                             {"sgd_learning_rate", h.sgd_learning_rate},
                {"sgd_epochs", h.sgd_epochs},                     {"sgd_l2", h.sgd_l2},
                {"nb_alpha", h.nb_alpha},                         {"nb_var_smoothing", h.nb_var_smoothing},
                {"tree_max_depth", h.tree_max_depth},             {"tree_min_samples_leaf", h.tree_min_samples_leaf}};
}

} // namespace

RunConfig resolve_config(const CliOverrides& o)
{
    RunConfig c = o.config_path ? load_config(*o.config_path) : RunConfig{};
    if (o.seed) {
        c.master_seed = *o.seed;
        c.dataset.synth.seed = *o.seed;
    }
    if (o.out) {
        if (o.out->empty()) {
            throw ConfigError("--out: must not be empty");
        }
        c.output_dir = *o.out;
    }
    if (o.jobs) {
        if (*o.jobs < 1) {
            throw ConfigError("--jobs: must be at least 1");
        }
        c.jobs = *o.jobs;
    }
    return c;
}

int run_guarded(const std::function<int()>& body, std::ostream& err)
{
    auto report = [&](const char* kind, const std::exception& e, int code) {
        err << json{{"error", kind}, {"message", e.what()}, {"exit_code", code}}.dump() << "\n";
        return code;
    };
    try {
        return body();
    } catch (const ConfigError& e) {
        return report("config", e, exit_config);
    } catch (const DataError& e) {
        return report("data", e, exit_data);
    } catch (const ValidationError& e) {
        return report("validation", e, exit_validation);
    } catch (const std::exception& e) {
        return report("internal", e, exit_other);
    }
}

int cmd_evaluate(const RunConfig& config, std::ostream& log)
{
    const Dataset ds = load_dataset(config.dataset);
    const auto [train_set, test_set] = split(ds, SplitSpec{config.dataset.train_fraction, derive_seed(config.master_seed, {0x5B17u})});
    log << "dataset: " << ds.rows() << " rows (" << train_set.rows() << " train, " << test_set.rows() << " test)\n";

    const SweepResult result = sweep(train_set, test_set, sweep_config(config));

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path dir(config.output_dir);
    const std::string header = header_comment(config);

    std::ostringstream fairness;
    fairness << header << "strategy,metric,learner,k,repetition,value\n";
    for (const auto& r : result.raw) {
        fairness << to_string(r.strategy) << ',' << to_string(r.metric) << ',' << to_string(r.learner) << ',' << real(r.k) << ','
                 << r.repetition << ',' << (std::isnan(r.value) ? std::string("nan") : real(r.value)) << '\n';
    }

    std::ostringstream robustness;
    robustness << header << "strategy,metric,learner,k,R\n";
    json curves = json::array();
    for (const auto& c : result.curves) {
        for (std::size_t i = 0; i < c.k.size(); ++i) {
            robustness << to_string(c.strategy) << ',' << to_string(c.metric) << ',' << to_string(c.learner) << ',' << real(c.k[i])
                       << ',' << (std::isnan(c.ratio[i]) ? std::string("nan") : real(c.ratio[i])) << '\n';
        }
        json entry{{"strategy", to_string(c.strategy)},
                   {"metric", to_string(c.metric)},
                   {"learner", to_string(c.learner)},
                   {"clean_metric", c.clean},
                   {"floor_bound", c.floor_bound},
                   {"final_ratio", json_number(c.ratio.back())},
                   {"trend", to_string(classify_curve(c))},
                   {"discarded", c.discarded}};
        if (c.k.size() >= 2) {
            const auto [lo, hi] = curve_slope(c.k, c.ratio, c.k.front(), c.k.back());
            entry["slope"] = json{{"min", json_number(lo)}, {"max", json_number(hi)}};
        }
        curves.push_back(std::move(entry));
    }

    json summary{{"config_hash", config_hash(config)},
                 {"master_seed", config.master_seed},
                 {"config", format_config(config)},
                 {"hyperparameters", hyper_json(config.hyper)},
                 {"dataset", {{"rows", ds.rows()}, {"train_rows", train_set.rows()}, {"test_rows", test_set.rows()}}},
                 {"evaluations", result.evaluations},
                 {"discarded", result.discarded},
                 {"discard_limit_exceeded", result.discard_limit_exceeded},
                 {"curves", curves}};

    write_atomically(dir / "fairness.csv", fairness.str());
    write_atomically(dir / "robustness.csv", robustness.str());
    write_atomically(dir / "summary.json", summary.dump(2) + "\n");
    log << "wrote " << (dir / "fairness.csv").string() << ", " << (dir / "robustness.csv").string() << ", "
        << (dir / "summary.json").string() << "\n";

    if (result.discard_limit_exceeded) {
        throw DataError("discarded repetitions (" + std::to_string(result.discarded) + " of " + std::to_string(result.evaluations) +
                        ") exceed the 1% limit");
    }
    return exit_ok;
}

namespace {

struct Validator {
    std::string name;
    bool passed = false;
    json details;
};

Validator closed_form(const TheoryConfig& t)
{
    const double d0 = bhattacharyya_gaussian(GaussianSpec{0, 1}, GaussianSpec{1, 1}, 0.0);
    const double d1 = bhattacharyya_gaussian(GaussianSpec{0, 1}, GaussianSpec{1, 1}, 1.0);
    const double e0 = std::abs(d0 - 0.125);
    const double e1 = std::abs(d1 - 0.0625);
    return {"bhattacharyya_closed_form", e0 <= t.analytic_tolerance && e1 <= t.analytic_tolerance,
            json{{"k0", d0}, {"k1", d1}, {"error_k0", e0}, {"error_k1", e1}, {"tolerance", t.analytic_tolerance}}};
}

Validator quadrature_grid(const TheoryConfig& t)
{
    double worst = 0.0;
    json at;
    Index points = 0;
    for (double mp : {-5.0, -1.0, 0.0, 2.0, 5.0}) {
        for (double mq : {-5.0, 0.5, 5.0}) {
            for (double sp : {0.5, 1.5, 3.0}) {
                for (double sq : {0.5, 3.0}) {
                    for (double k : {0.0, 0.5, 2.0, 10.0}) {
                        const GaussianSpec p{mp, sp};
                        const GaussianSpec q{mq, sq};
                        const double closed = bhattacharyya_gaussian(p, q, k);
                        const double quad = bhattacharyya(gaussian_density(p, k), gaussian_density(q, k)).distance;
                        ++points;
                        if (std::abs(closed - quad) >= worst) {
                            worst = std::abs(closed - quad);
                            at = json{{"mu_p", mp}, {"sigma_p", sp}, {"mu_q", mq}, {"sigma_q", sq}, {"k", k}};
                        }
                    }
                }
            }
        }
    }
    return {"quadrature_vs_closed_form", worst <= t.tolerance,
            json{{"points", points}, {"max_error", worst}, {"worst_at", at}, {"tolerance", t.tolerance}}};
}

Validator convergence(const TheoryConfig& t, const std::string& name, GaussianSpec p, GaussianSpec q, double k_max, bool check_final)
{
    std::vector<double> grid;
    for (int k = 0; k <= static_cast<int>(k_max); ++k) {
        grid.push_back(k);
    }
    const double final_tol = check_final ? t.convergence_tolerance : std::numeric_limits<double>::infinity();
    const ConvergenceReport r = verify_convergence(p, q, grid, final_tol, t.tolerance);
    json d{{"monotone", r.monotone},
           {"final_value", r.closed_form.back()},
           {"quadrature_agrees", r.quadrature_agrees},
           {"max_disagreement", r.max_disagreement},
           {"mean_term_final", r.mean_term.back()},
           {"variance_term_final", r.variance_term.back()}};
    if (check_final) {
        d["final_below_tolerance"] = r.final_below_tolerance;
        d["final_tolerance"] = t.convergence_tolerance;
    }
    if (r.counterexample) {
        d["counterexample"] = {{"k", (*r.counterexample)[0]}, {"previous", (*r.counterexample)[1]}, {"value", (*r.counterexample)[2]}};
    }
    return {name, r.passed(), d};
}

Validator phi_squared(const TheoryConfig& t)
{
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    const double v = l2_inner_product(phi, phi, -10.0, 10.0);
    const double expected = 1.0 / (2.0 * std::sqrt(M_PI));
    const double err = std::abs(v - expected);
    return {"phi_squared_inner_product", err <= t.analytic_tolerance,
            json{{"value", v}, {"expected", expected}, {"error", err}, {"tolerance", t.analytic_tolerance}}};
}

Validator eo_bounds(const TheoryConfig& t)
{
    EoBoundsInputs in;
    in.p = {{{0.2, 0.35}, {0.9, 0.7}}};
    in.joint = {0.2, 0.3};
    in.base_bias = 0.15;
    double worst = 0.0;
    bool ordered = true;
    json ks = json::array();
    for (double k : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        in.k = k;
        const BoundsReport r = eo_bias_bounds(in);
        if (k == 0.0) {
            worst = std::max(worst, std::abs(r.exact - r.upper));
        }
        if (k == 1.0) {
            worst = std::max(worst, std::abs(r.lower));
        }
        ordered = ordered && r.lower <= r.exact + t.analytic_tolerance && r.exact <= r.upper + t.analytic_tolerance;
        ks.push_back({{"k", k}, {"lower", r.lower}, {"exact", r.exact}, {"upper", r.upper}});
    }
    EoBoundsInputs flat = in;
    flat.p = {{{0.4, 0.6}, {0.4, 0.6}}};
    flat.k = 0.3;
    const BoundsReport z = eo_bias_bounds(flat);
    worst = std::max({worst, std::abs(z.lower), std::abs(z.upper), std::abs(z.exact)});
    return {"eo_bias_bounds_analytic", ordered && worst <= t.analytic_tolerance,
            json{{"max_error", worst}, {"ordered", ordered}, {"sweep", ks}, {"tolerance", t.analytic_tolerance}}};
}

ThresholdPolicy worked_policy()
{
    ThresholdPolicy policy;
    policy.groups[0] = GroupThresholds{0.2, 0.6, 0.3, 0.7};
    policy.groups[1] = GroupThresholds{0.3, 0.5, 0.5, 0.5};
    return policy;
}

Validator max_dp_example(const TheoryConfig& t)
{
    const double v = max_dp_under_noise(worked_policy(), ScoreRange{0.0, 1.0});
    const double err = std::abs(v - 0.08);
    return {"max_dp_worked_example", err <= t.analytic_tolerance,
            json{{"value", v}, {"expected", 0.08}, {"error", err}, {"tolerance", t.analytic_tolerance}}};
}

Validator max_dp_mc(const TheoryConfig& t, Seed seed)
{
    const double closed = max_dp_under_noise(worked_policy(), ScoreRange{0.0, 1.0});
    const MonteCarloEstimate mc = max_dp_monte_carlo(worked_policy(), ScoreRange{0.0, 1.0}, t.monte_carlo_n, seed);
    const double err = std::abs(mc.value - closed);
    return {"max_dp_monte_carlo", err <= t.monte_carlo_tolerance,
            json{{"closed_form", closed}, {"monte_carlo", mc.value}, {"sigma", mc.sigma}, {"n", t.monte_carlo_n},
                 {"error", err}, {"tolerance", t.monte_carlo_tolerance}}};
}

Validator laplace_interval(const TheoryConfig& t)
{
    double worst = 0.0;
    const double cases[][3] = {{-1.0, 1.0, 1.0}, {0.5, 2.0, 0.3}, {-3.0, -0.25, 2.0}, {-0.1, 4.0, 0.7}, {0.0, 10.0, 1.5}};
    for (const auto& c : cases) {
        const double k = c[2];
        const double exact = laplace_interval_prob(c[0], c[1], k);
        const double quad = integrate([k](double x) { return laplace_pdf(x, k); }, c[0], c[1], std::vector<double>{0.0}).value;
        worst = std::max(worst, std::abs(exact - quad));
    }
    return {"laplace_interval_vs_quadrature", worst <= t.tolerance, json{{"max_error", worst}, {"tolerance", t.tolerance}}};
}

} // namespace

int cmd_theory_check(const RunConfig& config, std::ostream& out)
{
    const TheoryConfig& t = config.theory;
    std::vector<Validator> vs;
    vs.push_back(closed_form(t));
    vs.push_back(quadrature_grid(t));
    vs.push_back(convergence(t, "convergence_N(0,1)_N(1,1)", GaussianSpec{0, 1}, GaussianSpec{1, 1}, 100, true));
    vs.push_back(convergence(t, "convergence_N(0,1)_N(5,2)", GaussianSpec{0, 1}, GaussianSpec{5, 2}, 50, false));
    vs.push_back(phi_squared(t));
    vs.push_back(eo_bounds(t));
    vs.push_back(max_dp_example(t));
    vs.push_back(max_dp_mc(t, config.master_seed));
    vs.push_back(laplace_interval(t));

    bool all = true;
    json list = json::array();
    for (const auto& v : vs) {
        all = all && v.passed;
        list.push_back({{"name", v.name}, {"passed", v.passed}, {"details", v.details}});
    }
    const json report{{"config_hash", config_hash(config)}, {"master_seed", config.master_seed}, {"passed", all}, {"validators", list}};
    std::filesystem::create_directories(config.output_dir);
    write_atomically(std::filesystem::path(config.output_dir) / "theory.json", report.dump(2) + "\n");
    out << report.dump(2) << "\n";
    return all ? exit_ok : exit_validation;
}

int cmd_inspect(const DatasetConfig& config, std::ostream& out)
{
    const Dataset ds = load_dataset(config);
    char buf[64];
    out << "N=" << ds.rows() << "\n";
    out << "D=" << ds.cols() << "\n";
    for (const auto& c : ds.columns()) {
        out << "column " << c.name << " " << to_string(c.kind);
        if (c.kind == FeatureKind::discrete) {
            out << " categories=" << c.categories.size();
        }
        out << "\n";
    }
    const GroupRates gr = group_rates(ds.labels(), ds.labels(), ds.protected_attr());
    for (int a = 0; a < 2; ++a) {
        out << "group " << a << ": count=" << gr.group_count(a);
        if (auto r = gr.selection_rate(a)) {
            std::snprintf(buf, sizeof buf, "%.6f", *r);
            out << " base_rate=" << buf;
        }
        out << "\n";
    }
    out << "label 0: count=" << ds.count_label(0) << "\n";
    out << "label 1: count=" << ds.count_label(1) << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(ds.count_label(1)) / static_cast<double>(ds.rows()));
    out << "base_rate=" << buf << "\n";
    return exit_ok;
}

} // namespace fairrobust
