#include "fairrobust/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fairrobust {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Reader {
public:
    explicit Reader(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string text(const std::string& key, const std::string& fallback)
    {
        used_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double number(const std::string& key, double fallback)
    {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string v = text(key, "");
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) {
                throw std::invalid_argument(v);
            }
            return d;
        } catch (const std::exception&) {
            throw ConfigError(key + ": expected a number, got '" + v + "'");
        }
    }

    std::uint64_t unsigned_number(const std::string& key, std::uint64_t fallback)
    {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string v = text(key, "");
        try {
            std::size_t used = 0;
            if (v.empty() || v[0] == '-') {
                throw std::invalid_argument(v);
            }
            const auto u = std::stoull(v, &used);
            if (used != v.size()) {
                throw std::invalid_argument(v);
            }
            return u;
        } catch (const std::exception&) {
            throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
        }
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string v = text(key, "");
        if (v == "true" || v == "1") {
            return true;
        }
        if (v == "false" || v == "0") {
            return false;
        }
        throw ConfigError(key + ": expected true or false, got '" + v + "'");
    }

    void reject_unknown() const
    {
        for (const auto& [k, v] : values_) {
            if (!used_.count(k)) {
                throw ConfigError(k + ": unknown key");
            }
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

std::vector<double> parse_grid(const std::string& key, const std::string& v)
{
    std::vector<double> grid;
    // lo:hi:count, evenly spaced and inclusive
    if (v.find(':') != std::string::npos) {
        double lo = 0, hi = 0;
        long count = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(v);
        if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1 || (count == 1 && lo != hi)) {
            throw ConfigError(key + ": expected lo:hi:count, got '" + v + "'");
        }
        for (long i = 0; i < count; ++i) {
            grid.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        }
        return grid;
    }
    for (const auto& item : split_list(v)) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError(key + ": malformed grid value '" + item + "'");
        }
    }
    return grid;
}

template <typename T, typename Parse>
std::vector<T> parse_items(const std::string& key, const std::string& v, Parse parse)
{
    std::vector<T> out;
    for (const auto& item : split_list(v)) {
        try {
            out.push_back(parse(item));
        } catch (const ConfigError& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    if (out.empty()) {
        throw ConfigError(key + ": empty list");
    }
    return out;
}

template <typename T>
std::string join_names(const std::vector<T>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? "," : "") + to_string(items[i]);
    }
    return out;
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    std::map<std::string, std::string> values;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        if (section.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        if (values.count(key)) {
            throw ConfigError(key + ": duplicate key");
        }
        values[key] = trim(line.substr(eq + 1));
    }

    Reader r(std::move(values));
    RunConfig c;
    const Hyperparameters dh;

    const std::string source = r.text("dataset.source", "synthetic");
    if (source == "synthetic") {
        c.dataset.source = DatasetSource::synthetic;
    } else if (source == "csv") {
        c.dataset.source = DatasetSource::csv;
    } else {
        throw ConfigError("dataset.source: expected synthetic or csv, got '" + source + "'");
    }
    c.dataset.csv = r.text("dataset.csv", "");
    c.dataset.schema = r.text("dataset.schema", "");
    if (c.dataset.source == DatasetSource::csv) {
        if (c.dataset.csv.empty()) {
            throw ConfigError("dataset.csv: missing path for a csv source");
        }
        if (c.dataset.schema.empty()) {
            throw ConfigError("dataset.schema: missing path for a csv source");
        }
    }
    c.dataset.synth.n = static_cast<Index>(r.unsigned_number("dataset.n", 2000));
    c.dataset.synth.bias = r.number("dataset.bias", 1.0);
    c.dataset.synth.group_ratio = r.number("dataset.group_ratio", 0.5);
    c.dataset.train_fraction = r.number("dataset.train_fraction", 0.7);
    c.dataset.balance = r.boolean("dataset.balance", false);
    if (!(c.dataset.train_fraction > 0.0 && c.dataset.train_fraction < 1.0)) {
        throw ConfigError("dataset.train_fraction: must lie in (0, 1)");
    }

    c.learners = parse_items<Learner>("model.learners", r.text("model.learners", "logreg"), parse_learner);
    auto& h = c.hyper;
    h.logreg_learning_rate = r.number("model.logreg_learning_rate", dh.logreg_learning_rate);
    h.logreg_max_iter = static_cast<int>(r.unsigned_number("model.logreg_max_iter", dh.logreg_max_iter));
    h.logreg_tol = r.number("model.logreg_tol", dh.logreg_tol);
    h.logreg_l2 = r.number("model.logreg_l2", dh.logreg_l2);
    h.svm_learning_rate = r.number("model.svm_learning_rate", dh.svm_learning_rate);
    h.svm_epochs = static_cast<int>(r.unsigned_number("model.svm_epochs", dh.svm_epochs));
    h.svm_l2 = r.number("model.svm_l2", dh.svm_l2);
    h.sgd_learning_rate = r.number("model.sgd_learning_rate", dh.sgd_learning_rate);
    h.sgd_epochs = static_cast<int>(r.unsigned_number("model.sgd_epochs", dh.sgd_epochs));
    h.sgd_l2 = r.number("model.sgd_l2", dh.sgd_l2);
    h.nb_alpha = r.number("model.nb_alpha", dh.nb_alpha);
    h.nb_var_smoothing = r.number("model.nb_var_smoothing", dh.nb_var_smoothing);
    h.tree_max_depth = static_cast<int>(r.unsigned_number("model.tree_max_depth", dh.tree_max_depth));
    h.tree_min_samples_leaf = static_cast<Index>(r.unsigned_number("model.tree_min_samples_leaf", dh.tree_min_samples_leaf));

    c.strategies = parse_items<StrategyId>("sweep.strategies", r.text("sweep.strategies", "f0,f1,f2,f3"), parse_strategy);
    c.metrics = parse_items<FairnessMetricId>("sweep.metrics", r.text("sweep.metrics", "dp,eo,fp,tp"), parse_metric);
    if (r.has("sweep.k_grid")) {
        c.k_grid = parse_grid("sweep.k_grid", r.text("sweep.k_grid", ""));
    } else {
        r.text("sweep.k_grid", "");
    }
    if (c.k_grid.empty() || c.k_grid.front() != 0.0) {
        throw ConfigError("sweep.k_grid: must start at 0");
    }
    for (std::size_t i = 1; i < c.k_grid.size(); ++i) {
        if (!(c.k_grid[i] > c.k_grid[i - 1])) {
            throw ConfigError("sweep.k_grid: must be strictly increasing");
        }
    }
    c.repetitions = static_cast<Index>(r.unsigned_number("sweep.repetitions", 50));
    if (c.repetitions < 1) {
        throw ConfigError("sweep.repetitions: must be at least 1");
    }
    c.delta_floor = r.number("sweep.delta_floor", 1e-6);
    if (!(c.delta_floor > 0.0)) {
        throw ConfigError("sweep.delta_floor: must be positive");
    }
    c.master_seed = r.unsigned_number("sweep.master_seed", 0);
    c.dataset.synth.seed = c.master_seed;
    c.jobs = static_cast<unsigned>(r.unsigned_number("sweep.jobs", 1));
    if (c.jobs < 1) {
        throw ConfigError("sweep.jobs: must be at least 1");
    }

    c.expgrad.eps_tol = r.number("expgrad.eps_tol", c.expgrad.eps_tol);
    c.expgrad.eta = r.number("expgrad.eta", c.expgrad.eta);
    c.expgrad.t_max = static_cast<int>(r.unsigned_number("expgrad.t_max", static_cast<std::uint64_t>(c.expgrad.t_max)));
    c.expgrad.bound = r.number("expgrad.bound", c.expgrad.bound);
    if (!(c.expgrad.eps_tol > 0.0) || !(c.expgrad.eta > 0.0) || c.expgrad.t_max < 1 || !(c.expgrad.bound > 0.0)) {
        throw ConfigError("expgrad: eps_tol, eta and bound must be positive and t_max at least 1");
    }

    const std::string fit = r.text("threshold.fit_data", "clean");
    if (fit != "clean" && fit != "noisy") {
        throw ConfigError("threshold.fit_data: expected clean or noisy, got '" + fit + "'");
    }
    c.threshold_fit_noisy = fit == "noisy";

    c.theory.tolerance = r.number("theory.tolerance", c.theory.tolerance);
    c.theory.convergence_tolerance = r.number("theory.convergence_tolerance", c.theory.convergence_tolerance);
    c.theory.analytic_tolerance = r.number("theory.analytic_tolerance", c.theory.analytic_tolerance);
    c.theory.monte_carlo_n = static_cast<Index>(r.unsigned_number("theory.monte_carlo_n", static_cast<std::uint64_t>(c.theory.monte_carlo_n)));
    c.theory.monte_carlo_tolerance = r.number("theory.monte_carlo_tolerance", c.theory.monte_carlo_tolerance);
    if (c.theory.tolerance < 0.0 || c.theory.convergence_tolerance < 0.0 || c.theory.analytic_tolerance < 0.0 ||
        c.theory.monte_carlo_tolerance < 0.0 || c.theory.monte_carlo_n < 2) {
        throw ConfigError("theory: tolerances must be non-negative and monte_carlo_n at least 2");
    }

    c.output_dir = r.text("output.dir", "out");
    if (c.output_dir.empty()) {
        throw ConfigError("output.dir: must not be empty");
    }
    r.reject_unknown();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const RunConfig& c)
{
    std::ostringstream out;
    const auto& h = c.hyper;
    out << "[dataset]\n";
    out << "source = " << (c.dataset.source == DatasetSource::csv ? "csv" : "synthetic") << "\n";
    out << "csv = " << c.dataset.csv << "\n";
    out << "schema = " << c.dataset.schema << "\n";
    out << "n = " << c.dataset.synth.n << "\n";
    out << "bias = " << real(c.dataset.synth.bias) << "\n";
    out << "group_ratio = " << real(c.dataset.synth.group_ratio) << "\n";
    out << "train_fraction = " << real(c.dataset.train_fraction) << "\n";
    out << "balance = " << (c.dataset.balance ? "true" : "false") << "\n";
    out << "\n[model]\n";
    out << "learners = " << join_names(c.learners) << "\n";
    out << "logreg_learning_rate = " << real(h.logreg_learning_rate) << "\n";
    out << "logreg_max_iter = " << h.logreg_max_iter << "\n";
    out << "logreg_tol = " << real(h.logreg_tol) << "\n";
    out << "logreg_l2 = " << real(h.logreg_l2) << "\n";
    out << "svm_learning_rate = " << real(h.svm_learning_rate) << "\n";
    out << "svm_epochs = " << h.svm_epochs << "\n";
    out << "svm_l2 = " << real(h.svm_l2) << "\n";
    out << "sgd_learning_rate = " << real(h.sgd_learning_rate) << "\n";
    out << "sgd_epochs = " << h.sgd_epochs << "\n";
    out << "sgd_l2 = " << real(h.sgd_l2) << "\n";
    out << "nb_alpha = " << real(h.nb_alpha) << "\n";
    out << "nb_var_smoothing = " << real(h.nb_var_smoothing) << "\n";
    out << "tree_max_depth = " << h.tree_max_depth << "\n";
    out << "tree_min_samples_leaf = " << h.tree_min_samples_leaf << "\n";
    out << "\n[sweep]\n";
    out << "strategies = " << join_names(c.strategies) << "\n";
    out << "metrics = " << join_names(c.metrics) << "\n";
    out << "k_grid = ";
    for (std::size_t i = 0; i < c.k_grid.size(); ++i) {
        out << (i ? "," : "") << real(c.k_grid[i]);
    }
    out << "\n";
    out << "repetitions = " << c.repetitions << "\n";
    out << "delta_floor = " << real(c.delta_floor) << "\n";
    out << "master_seed = " << c.master_seed << "\n";
    out << "jobs = " << c.jobs << "\n";
    out << "\n[expgrad]\n";
    out << "eps_tol = " << real(c.expgrad.eps_tol) << "\n";
    out << "eta = " << real(c.expgrad.eta) << "\n";
    out << "t_max = " << c.expgrad.t_max << "\n";
    out << "bound = " << real(c.expgrad.bound) << "\n";
    out << "\n[threshold]\n";
    out << "fit_data = " << (c.threshold_fit_noisy ? "noisy" : "clean") << "\n";
    out << "\n[theory]\n";
    out << "tolerance = " << real(c.theory.tolerance) << "\n";
    out << "convergence_tolerance = " << real(c.theory.convergence_tolerance) << "\n";
    out << "analytic_tolerance = " << real(c.theory.analytic_tolerance) << "\n";
    out << "monte_carlo_n = " << c.theory.monte_carlo_n << "\n";
    out << "monte_carlo_tolerance = " << real(c.theory.monte_carlo_tolerance) << "\n";
    out << "\n[output]\n";
    out << "dir = " << c.output_dir << "\n";
    return out.str();
}

std::string config_hash(const RunConfig& config)
{
    // jobs and the output directory do not affect results, so they are left out of the hash.
    RunConfig copy = config;
    copy.jobs = 1;
    copy.output_dir = "out";
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : format_config(copy)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SweepConfig sweep_config(const RunConfig& c)
{
    SweepConfig s;
    s.k_grid = c.k_grid;
    s.repetitions = c.repetitions;
    s.strategies = c.strategies;
    s.metrics = c.metrics;
    s.learners = c.learners;
    s.strategy.hyper = c.hyper;
    s.strategy.expgrad = c.expgrad;
    s.master_seed = c.master_seed;
    s.delta_floor = c.delta_floor;
    s.jobs = c.jobs;
    s.threshold_fit_noisy = c.threshold_fit_noisy;
    return s;
}

Dataset load_dataset(const DatasetConfig& config)
{
    Dataset ds = [&] {
        if (config.source == DatasetSource::synthetic) {
            return synth_biased(config.synth);
        }
        if (config.csv.empty()) {
            throw ConfigError("dataset.csv: missing path for a csv source");
        }
        if (!std::filesystem::is_regular_file(config.csv)) {
            throw ConfigError("dataset.csv: no such file '" + config.csv + "'");
        }
        if (!std::filesystem::is_regular_file(config.schema)) {
            throw ConfigError("dataset.schema: no such file '" + config.schema + "'");
        }
        return load_csv(config.csv, load_schema(config.schema));
    }();
    if (config.balance) {
        ds = balance_classes(ds, derive_seed(config.synth.seed, {0xBA1u}));
    }
    return ds;
}

} // namespace fairrobust
