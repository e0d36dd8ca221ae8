#include "fairrobust/dataset.hpp"

#include "fairrobust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace fairrobust {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::set<std::string> parse_value_set(const std::string& text)
{
    std::set<std::string> out;
    for (auto& v : split_fields(text, '|')) {
        out.insert(trim(v));
    }
    return out;
}

std::string join_value_set(const std::set<std::string>& values)
{
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) {
            out += '|';
        }
        out += v;
    }
    return out;
}

int to_binary(const std::string& raw, const std::optional<std::set<std::string>>& positive, const char* what)
{
    if (positive) {
        return positive->contains(raw) ? 1 : 0;
    }
    if (raw == "0") {
        return 0;
    }
    if (raw == "1") {
        return 1;
    }
    throw DataError(std::string(what) + " column not binary: value '" + raw + "'");
}

} // namespace

std::string to_string(FeatureKind kind)
{
    return kind == FeatureKind::continuous ? "continuous" : "discrete";
}

FeatureKind parse_feature_kind(const std::string& text)
{
    if (text == "continuous") {
        return FeatureKind::continuous;
    }
    if (text == "discrete") {
        return FeatureKind::discrete;
    }
    throw ConfigError("unknown feature kind '" + text + "'");
}

Column Column::continuous(std::string name, VectorXd values)
{
    Column c;
    c.name = std::move(name);
    c.kind = FeatureKind::continuous;
    c.values = std::move(values);
    return c;
}

Column Column::discrete(std::string name, VectorXi codes, std::vector<std::string> categories)
{
    Column c;
    c.name = std::move(name);
    c.kind = FeatureKind::discrete;
    c.codes = std::move(codes);
    c.categories = std::move(categories);
    return c;
}

Column Column::discrete_from_cells(std::string name, const std::vector<std::string>& cells)
{
    std::vector<std::string> categories;
    std::unordered_map<std::string, int> index;
    VectorXi codes(static_cast<Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto [it, inserted] = index.try_emplace(cells[i], static_cast<int>(categories.size()));
        if (inserted) {
            categories.push_back(cells[i]);
        }
        codes(static_cast<Index>(i)) = it->second;
    }
    return discrete(std::move(name), std::move(codes), std::move(categories));
}

Dataset::Dataset(std::vector<Column> columns,
                 VectorXi labels,
                 VectorXi protected_attr,
                 std::vector<std::string> protected_raw,
                 std::string label_name,
                 std::string protected_name)
    : columns_(std::move(columns))
    , labels_(std::move(labels))
    , protected_(std::move(protected_attr))
    , protected_raw_(std::move(protected_raw))
    , label_name_(std::move(label_name))
    , protected_name_(std::move(protected_name))
{
    if (protected_raw_.empty()) {
        protected_raw_.reserve(static_cast<std::size_t>(protected_.size()));
        for (Index i = 0; i < protected_.size(); ++i) {
            protected_raw_.push_back(std::to_string(protected_(i)));
        }
    }
    validate();
}

void Dataset::validate() const
{
    const Index n = labels_.size();
    if (n < 1) {
        throw DataError("dataset has no rows");
    }
    if (columns_.empty()) {
        throw DataError("dataset has no feature columns");
    }
    if (protected_.size() != n || static_cast<Index>(protected_raw_.size()) != n) {
        throw DataError("protected column length differs from label length");
    }
    for (Index i = 0; i < n; ++i) {
        if (labels_(i) != 0 && labels_(i) != 1) {
            throw DataError("label column not binary");
        }
        if (protected_(i) != 0 && protected_(i) != 1) {
            throw DataError("protected column not binary");
        }
    }
    for (const auto& c : columns_) {
        if (c.size() != n) {
            throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) + " rows, expected " + std::to_string(n));
        }
        if (c.kind == FeatureKind::continuous) {
            if (!c.values.allFinite()) {
                throw DataError("non-finite value in continuous column '" + c.name + "'");
            }
        } else {
            if (c.categories.empty()) {
                throw DataError("discrete column '" + c.name + "' has an empty category set");
            }
            const int m = static_cast<int>(c.categories.size());
            if ((c.codes.array() < 0).any() || (c.codes.array() >= m).any()) {
                throw DataError("discrete column '" + c.name + "' holds a code outside its category set");
            }
        }
    }
}

std::optional<Index> Dataset::find_column(const std::string& name) const
{
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (columns_[j].name == name) {
            return static_cast<Index>(j);
        }
    }
    return std::nullopt;
}

FeatureRow Dataset::row(Index i) const
{
    FeatureRow out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        if (c.kind == FeatureKind::continuous) {
            out.emplace_back(c.values(i));
        } else {
            out.emplace_back(c.categories[static_cast<std::size_t>(c.codes(i))]);
        }
    }
    return out;
}

Dataset Dataset::select_rows(const std::vector<Index>& rows) const
{
    std::vector<Column> cols = columns_;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto& src = columns_[j];
        auto& dst = cols[j];
        if (src.kind == FeatureKind::continuous) {
            dst.values = src.values(rows);
        } else {
            dst.codes = src.codes(rows);
        }
    }
    VectorXi y = labels_(rows);
    VectorXi a = protected_(rows);
    std::vector<std::string> raw;
    raw.reserve(rows.size());
    for (auto r : rows) {
        raw.push_back(protected_raw_.at(static_cast<std::size_t>(r)));
    }
    return Dataset(std::move(cols), std::move(y), std::move(a), std::move(raw), label_name_, protected_name_);
}

Dataset Dataset::with_columns(std::vector<Column> columns) const
{
    return Dataset(std::move(columns), labels_, protected_, protected_raw_, label_name_, protected_name_);
}

Dataset Dataset::with_protected(VectorXi protected_attr) const
{
    return Dataset(columns_, labels_, std::move(protected_attr), {}, label_name_, protected_name_);
}

Index Dataset::count_label(int y) const
{
    return (labels_.array() == y).count();
}

Index Dataset::count_group(int a) const
{
    return (protected_.array() == a).count();
}

// ---------------------------------------------------------------------------
// Schema sidecar

Schema parse_schema(const std::string& text)
{
    Schema schema;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("schema line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "label") {
            schema.label = value;
        } else if (key == "protected") {
            schema.protected_column = value;
        } else if (key == "label.positive") {
            schema.label_positive = parse_value_set(value);
        } else if (key == "protected.positive") {
            schema.protected_positive = parse_value_set(value);
        } else if (key.starts_with("kind.")) {
            schema.kinds[key.substr(5)] = parse_feature_kind(value);
        } else if (key.starts_with("drop.")) {
            if (value == "true") {
                schema.dropped.insert(key.substr(5));
            }
        } else if (key.starts_with("filter.")) {
            schema.filters[key.substr(7)].insert(value);
        } else {
            throw ConfigError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (schema.label.empty()) {
        throw ConfigError("schema does not name a label column");
    }
    if (schema.protected_column.empty()) {
        throw ConfigError("schema does not name a protected column");
    }
    if (schema.label == schema.protected_column) {
        throw ConfigError("label and protected column must differ");
    }
    return schema;
}

Schema load_schema(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open schema file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_schema(buf.str());
}

std::string format_schema(const Schema& schema)
{
    std::string out = "label=" + schema.label + "\nprotected=" + schema.protected_column + "\n";
    if (schema.label_positive) {
        out += "label.positive=" + join_value_set(*schema.label_positive) + "\n";
    }
    if (schema.protected_positive) {
        out += "protected.positive=" + join_value_set(*schema.protected_positive) + "\n";
    }
    for (const auto& [name, kind] : schema.kinds) {
        out += "kind." + name + "=" + to_string(kind) + "\n";
    }
    for (const auto& name : schema.dropped) {
        out += "drop." + name + "=true\n";
    }
    for (const auto& [name, values] : schema.filters) {
        for (const auto& v : values) {
            out += "filter." + name + "=" + v + "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

Dataset parse_csv(const std::string& text, const Schema& schema, const RowFilter& keep)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("CSV is empty: header row required");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line = line.substr(3); // UTF-8 BOM
    }
    std::vector<std::string> header;
    for (auto& h : split_fields(line, ',')) {
        header.push_back(trim(h));
    }
    std::map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j].empty() || header[j][0] == '@') {
            throw DataError("invalid CSV column name '" + header[j] + "'");
        }
        if (!position.emplace(header[j], j).second) {
            throw DataError("duplicate CSV column '" + header[j] + "'");
        }
    }
    auto require = [&](const std::string& name, const char* role) {
        if (!position.contains(name)) {
            throw DataError(std::string("schema/column mismatch: ") + role + " column '" + name + "' not in CSV header");
        }
    };
    require(schema.label, "label");
    require(schema.protected_column, "protected");
    for (const auto& [name, kind] : schema.kinds) {
        require(name, "declared");
    }
    for (const auto& [name, values] : schema.filters) {
        require(name, "filter");
    }

    std::vector<std::string> features;
    for (const auto& h : header) {
        if (h == schema.label || h == schema.protected_column || schema.dropped.contains(h)) {
            continue;
        }
        if (!schema.kinds.contains(h)) {
            throw DataError("schema/column mismatch: no kind declared for column '" + h + "'");
        }
        features.push_back(h);
    }
    if (features.empty()) {
        throw DataError("schema leaves no feature columns");
    }

    std::vector<std::vector<std::string>> cells(header.size());
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_fields(line, ',');
        if (fields.size() != header.size()) {
            throw DataError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        bool drop = false;
        for (const auto& [name, values] : schema.filters) {
            if (values.contains(trim(fields[position.at(name)]))) {
                drop = true;
                break;
            }
        }
        if (!drop && keep) {
            std::map<std::string, std::string> row;
            for (std::size_t j = 0; j < header.size(); ++j) {
                row.emplace(header[j], trim(fields[j]));
            }
            drop = !keep(row);
        }
        if (drop) {
            continue;
        }
        for (std::size_t j = 0; j < header.size(); ++j) {
            auto v = trim(fields[j]);
            if (v.empty() && !schema.dropped.contains(header[j])) {
                throw DataError("CSV line " + std::to_string(lineno) + ": missing value in column '" + header[j] + "'");
            }
            cells[j].push_back(std::move(v));
        }
    }
    const auto n = cells[0].size();
    if (n == 0) {
        throw DataError("CSV has no data rows");
    }

    std::vector<Column> columns;
    for (const auto& name : features) {
        const auto& raw = cells[position.at(name)];
        if (schema.kinds.at(name) == FeatureKind::continuous) {
            VectorXd values(static_cast<Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(raw[i], &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != raw[i].size()) {
                    throw DataError("column '" + name + "' declared continuous but holds '" + raw[i] + "'");
                }
                if (!std::isfinite(v)) {
                    throw DataError("non-finite value in continuous column '" + name + "'");
                }
                values(static_cast<Index>(i)) = v;
            }
            columns.push_back(Column::continuous(name, std::move(values)));
        } else {
            columns.push_back(Column::discrete_from_cells(name, raw));
        }
    }
    VectorXi labels(static_cast<Index>(n));
    VectorXi protected_attr(static_cast<Index>(n));
    const auto& raw_labels = cells[position.at(schema.label)];
    const auto& raw_protected = cells[position.at(schema.protected_column)];
    for (std::size_t i = 0; i < n; ++i) {
        labels(static_cast<Index>(i)) = to_binary(raw_labels[i], schema.label_positive, "label");
        protected_attr(static_cast<Index>(i)) = to_binary(raw_protected[i], schema.protected_positive, "protected");
    }
    Dataset ds(std::move(columns), std::move(labels), std::move(protected_attr), raw_protected, schema.label, schema.protected_column);
    if (schema.protected_positive) {
        return binarize_protected(ds, *schema.protected_positive);
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const RowFilter& keep)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open CSV file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema, keep);
}

std::string format_csv(const Dataset& ds)
{
    std::string out;
    for (const auto& c : ds.columns()) {
        out += c.name + ",";
    }
    out += ds.protected_name() + "," + ds.label_name() + "\n";
    for (Index i = 0; i < ds.rows(); ++i) {
        for (const auto& c : ds.columns()) {
            if (c.kind == FeatureKind::continuous) {
                out += format_real(c.values(i));
            } else {
                out += c.categories[static_cast<std::size_t>(c.codes(i))];
            }
            out += ',';
        }
        out += ds.protected_raw()[static_cast<std::size_t>(i)] + "," + std::to_string(ds.labels()(i)) + "\n";
    }
    return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write CSV file '" + path.string() + "'");
    }
    out << format_csv(ds);
}

Schema schema_for(const Dataset& ds)
{
    Schema s;
    s.label = ds.label_name();
    s.protected_column = ds.protected_name();
    for (const auto& c : ds.columns()) {
        s.kinds[c.name] = c.kind;
    }
    std::set<std::string> positive;
    bool binary_raw = true;
    for (Index i = 0; i < ds.rows(); ++i) {
        const auto& raw = ds.protected_raw()[static_cast<std::size_t>(i)];
        if (ds.protected_attr()(i) == 1) {
            positive.insert(raw);
        }
        binary_raw = binary_raw && raw == std::to_string(ds.protected_attr()(i));
    }
    if (!binary_raw) {
        s.protected_positive = positive;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Transforms

Index train_size(Index n, double train_fraction)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (n < 2) {
        throw DataError("cannot split fewer than two rows: a partition would be empty");
    }
    const auto raw = static_cast<Index>(std::floor(static_cast<double>(n) * train_fraction));
    return std::clamp<Index>(raw, 1, n - 1);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec)
{
    const Index n_train = train_size(ds.rows(), spec.train_fraction);
    if (ds.count_label(0) == 0 || ds.count_label(1) == 0) {
        throw DataError("split requires both label values");
    }
    if (ds.count_group(0) == 0 || ds.count_group(1) == 0) {
        throw DataError("split requires both protected groups");
    }
    Rng rng(derive_seed(spec.seed, {0x5350u}));
    auto perm = random_permutation(ds.rows(), rng);
    std::vector<Index> train(perm.begin(), perm.begin() + n_train);
    std::vector<Index> test(perm.begin() + n_train, perm.end());
    return {ds.select_rows(train), ds.select_rows(test)};
}

Dataset balance_classes(const Dataset& ds, Seed seed)
{
    const Index n0 = ds.count_label(0);
    const Index n1 = ds.count_label(1);
    if (n0 == 0 || n1 == 0) {
        throw DataError("balance_classes requires both label values");
    }
    if (n0 == n1) {
        return ds;
    }
    const int majority = n0 > n1 ? 0 : 1;
    const Index keep_count = std::min(n0, n1);
    std::vector<Index> majority_rows;
    for (Index i = 0; i < ds.rows(); ++i) {
        if (ds.labels()(i) == majority) {
            majority_rows.push_back(i);
        }
    }
    Rng rng(derive_seed(seed, {0xBA1u}));
    auto perm = random_permutation(static_cast<Index>(majority_rows.size()), rng);
    std::vector<bool> keep(static_cast<std::size_t>(ds.rows()), true);
    for (std::size_t r = static_cast<std::size_t>(keep_count); r < perm.size(); ++r) {
        keep[static_cast<std::size_t>(majority_rows[static_cast<std::size_t>(perm[r])])] = false;
    }
    std::vector<Index> rows;
    for (Index i = 0; i < ds.rows(); ++i) {
        if (keep[static_cast<std::size_t>(i)]) {
            rows.push_back(i);
        }
    }
    return ds.select_rows(rows);
}

Dataset binarize_protected(const Dataset& ds, const std::set<std::string>& positive_set)
{
    VectorXi a(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i) {
        a(i) = positive_set.contains(ds.protected_raw()[static_cast<std::size_t>(i)]) ? 1 : 0;
    }
    const Index ones = a.sum();
    if (ones == 0) {
        throw DataError("positive set matches no rows: protected group 1 would be empty");
    }
    if (ones == ds.rows()) {
        throw DataError("positive set matches all rows: protected group 0 would be empty");
    }
    return Dataset(ds.columns(), ds.labels(), std::move(a), ds.protected_raw(), ds.label_name(), ds.protected_name());
}

// Generative model (all draws from one stream seeded by `seed`):
//   A:  exactly round(n * group_ratio) rows get A = 1, placed by a random permutation
//   x1 ~ N(bias * A, 1),  x2 ~ N(bias * A, 1)
//   c in {low, mid, high}: P(low) = 1/3 - bias*(A - 1/2)/3, P(mid) = 1/3,
//                          P(high) = 1/3 + bias*(A - 1/2)/3
//   z = 1.2 (x1 - bias/2) + 0.6 (x2 - bias/2) + e(c) + 0.5 bias (2A - 1),
//       e(low) = -0.5, e(mid) = 0, e(high) = 0.5
//   Y ~ Bernoulli(1 / (1 + exp(-z)))
Dataset synth_biased(const SynthParams& p)
{
    if (p.n < 100) {
        throw ConfigError("synth_biased requires n >= 100");
    }
    if (!(p.bias >= 0.0 && p.bias <= 1.0)) {
        throw ConfigError("synth_biased requires bias in [0, 1]");
    }
    if (!(p.group_ratio > 0.0 && p.group_ratio < 1.0)) {
        throw ConfigError("synth_biased requires group_ratio in (0, 1)");
    }
    Rng rng(derive_seed(p.seed, {0x5EEDu}));
    const Index n = p.n;
    const auto n1 = std::clamp<Index>(static_cast<Index>(std::llround(static_cast<double>(n) * p.group_ratio)), 1, n - 1);
    VectorXi a = VectorXi::Zero(n);
    auto perm = random_permutation(n, rng);
    for (Index r = 0; r < n1; ++r) {
        a(perm[static_cast<std::size_t>(r)]) = 1;
    }

    VectorXd x1(n), x2(n);
    VectorXi c(n), y(n);
    static constexpr double effect[3] = {-0.5, 0.0, 0.5};
    for (Index i = 0; i < n; ++i) {
        const double ai = a(i);
        x1(i) = rng.normal(p.bias * ai, 1.0);
        x2(i) = rng.normal(p.bias * ai, 1.0);
        const double shift = p.bias * (ai - 0.5) / 3.0;
        const double p_low = 1.0 / 3.0 - shift;
        const double u = rng.uniform();
        c(i) = u < p_low ? 0 : (u < p_low + 1.0 / 3.0 ? 1 : 2);
        const double z = 1.2 * (x1(i) - p.bias / 2) + 0.6 * (x2(i) - p.bias / 2) + effect[c(i)] + 0.5 * p.bias * (2.0 * ai - 1.0);
        y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    }
    std::vector<Column> cols;
    cols.push_back(Column::continuous("x1", std::move(x1)));
    cols.push_back(Column::continuous("x2", std::move(x2)));
    cols.push_back(Column::discrete("c", std::move(c), {"low", "mid", "high"}));
    return Dataset(std::move(cols), std::move(y), std::move(a));
}

Dataset synth_biased(Index n, double bias, double group_ratio, Seed seed)
{
    return synth_biased(SynthParams{n, bias, group_ratio, seed});
}

} // namespace fairrobust
