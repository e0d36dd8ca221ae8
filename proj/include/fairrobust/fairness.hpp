#pragma once

#include "fairrobust/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fairrobust {

enum class FairnessMetricId { dp, eo, fp, tp };

std::string to_string(FairnessMetricId id);
FairnessMetricId parse_metric(const std::string& text);
const std::vector<FairnessMetricId>& all_metrics();

// Exact counts per (label y, group a) cell and per group.
struct GroupRates {
    std::array<std::array<Index, 2>, 2> count{};    // [y][a]
    std::array<std::array<Index, 2>, 2> positive{}; // [y][a]

    Index group_count(int a) const { return count[0][a] + count[1][a]; }
    Index group_positive(int a) const { return positive[0][a] + positive[1][a]; }
    Index total() const { return group_count(0) + group_count(1); }

    // nullopt when the denominator is zero.
    std::optional<double> selection_rate(int a) const;
    std::optional<double> positive_rate(int y, int a) const;
};

GroupRates group_rates(const VectorXi& preds, const VectorXi& labels, const VectorXi& protected_attr);

// |P{f=1 | A=0} - P{f=1 | A=1}|
double demographic_parity(const GroupRates& gr);
// |P{f=1 | Y=0, A=0} - P{f=1 | Y=0, A=1}|
double false_positive_diff(const GroupRates& gr);
// |P{f=1 | Y=1, A=0} - P{f=1 | Y=1, A=1}|
double true_positive_diff(const GroupRates& gr);
// max over y of the two slices above; zero iff both slices agree.
double equalized_odds(const GroupRates& gr);

// All four throw UndefinedMetric when a required cell is empty.
double metric(FairnessMetricId id, const GroupRates& gr);
double metric(FairnessMetricId id, const VectorXi& preds, const VectorXi& labels, const VectorXi& protected_attr);

} // namespace fairrobust
