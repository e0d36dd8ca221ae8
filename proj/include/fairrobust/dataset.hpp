#pragma once

#include "fairrobust/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fairrobust {

enum class FeatureKind { continuous, discrete };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

// One feature column. Continuous columns use `values`; discrete columns use
// `codes`, indices into the ordered category set `categories`.
struct Column {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    VectorXd values;
    VectorXi codes;
    std::vector<std::string> categories;

    static Column continuous(std::string name, VectorXd values);
    static Column discrete(std::string name, VectorXi codes, std::vector<std::string> categories);
    // Builds a discrete column from raw cell strings; categories in order of first appearance.
    static Column discrete_from_cells(std::string name, const std::vector<std::string>& cells);

    Index size() const { return kind == FeatureKind::continuous ? values.size() : codes.size(); }
    bool operator==(const Column&) const = default;
};

// A single feature row: doubles for continuous cells, category names for discrete cells.
using Cell = std::variant<double, std::string>;
using FeatureRow = std::vector<Cell>;

// Immutable tabular dataset: N rows, D feature columns, binary label Y and
// binary protected attribute A.
class Dataset {
public:
    // `protected_raw` holds the raw protected values the binary column was
    // derived from; if empty, the raw values are "0"/"1".
    Dataset(std::vector<Column> columns,
            VectorXi labels,
            VectorXi protected_attr,
            std::vector<std::string> protected_raw = {},
            std::string label_name = "y",
            std::string protected_name = "a");

    Index rows() const { return labels_.size(); }
    Index cols() const { return static_cast<Index>(columns_.size()); }

    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(Index j) const { return columns_.at(static_cast<std::size_t>(j)); }
    std::optional<Index> find_column(const std::string& name) const;
    const VectorXi& labels() const { return labels_; }
    const VectorXi& protected_attr() const { return protected_; }
    const std::vector<std::string>& protected_raw() const { return protected_raw_; }
    const std::string& label_name() const { return label_name_; }
    const std::string& protected_name() const { return protected_name_; }

    FeatureRow row(Index i) const;

    // Row subset in the given order.
    Dataset select_rows(const std::vector<Index>& rows) const;
    Dataset with_columns(std::vector<Column> columns) const;
    Dataset with_protected(VectorXi protected_attr) const;

    Index count_label(int y) const;
    Index count_group(int a) const;

    bool operator==(const Dataset&) const = default;

private:
    void validate() const;

    std::vector<Column> columns_;
    VectorXi labels_;
    VectorXi protected_;
    std::vector<std::string> protected_raw_;
    std::string label_name_;
    std::string protected_name_;
};

// Column-role declaration read from the `key=value` sidecar file.
struct Schema {
    std::string label;
    std::string protected_column;
    std::map<std::string, FeatureKind> kinds;
    std::set<std::string> dropped;
    // Rows whose cell in the given column equals one of the values are removed.
    std::map<std::string, std::set<std::string>> filters;
    // Raw values that map to 1; when absent the column must already be 0/1.
    std::optional<std::set<std::string>> label_positive;
    std::optional<std::set<std::string>> protected_positive;
};

Schema parse_schema(const std::string& text);
Schema load_schema(const std::filesystem::path& path);
std::string format_schema(const Schema& schema);

// Extra row predicate applied after the schema filters; return false to drop a row.
using RowFilter = std::function<bool(const std::map<std::string, std::string>& cells)>;

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const RowFilter& keep = {});
Dataset parse_csv(const std::string& text, const Schema& schema, const RowFilter& keep = {});

// Writes features in column order followed by the protected and label columns.
// Reals use 17 significant digits.
std::string format_csv(const Dataset& ds);
void write_csv(const Dataset& ds, const std::filesystem::path& path);
// Schema that reloads the output of format_csv.
Schema schema_for(const Dataset& ds);

struct SplitSpec {
    double train_fraction = 0.7;
    Seed seed = 0;
};

// train size = floor(N * fraction), clamped so both sides hold at least one row.
Index train_size(Index n, double train_fraction);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Down-samples the majority label uniformly without replacement; retained
// rows keep their relative order.
Dataset balance_classes(const Dataset& ds, Seed seed);

// Recomputes A from the raw protected values: 1 for members of positive_set.
Dataset binarize_protected(const Dataset& ds, const std::set<std::string>& positive_set);

// Parameters of the synthetic biased generator; see README for the equations.
struct SynthParams {
    Index n = 2000;
    double bias = 1.0;
    double group_ratio = 0.5;
    Seed seed = 0;
};

Dataset synth_biased(const SynthParams& params);
Dataset synth_biased(Index n, double bias, double group_ratio, Seed seed);

} // namespace fairrobust
