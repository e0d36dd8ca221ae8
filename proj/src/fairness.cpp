#include "fairrobust/fairness.hpp"

#include <algorithm>
#include <cmath>

namespace fairrobust {

std::string to_string(FairnessMetricId id)
{
    switch (id) {
    case FairnessMetricId::dp: return "dp";
    case FairnessMetricId::eo: return "eo";
    case FairnessMetricId::fp: return "fp";
    case FairnessMetricId::tp: return "tp";
    }
    return "unknown";
}

FairnessMetricId parse_metric(const std::string& text)
{
    for (auto m : all_metrics()) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw ConfigError("unknown fairness metric '" + text + "'");
}

const std::vector<FairnessMetricId>& all_metrics()
{
    static const std::vector<FairnessMetricId> ids{FairnessMetricId::dp, FairnessMetricId::eo, FairnessMetricId::fp,
                                                   FairnessMetricId::tp};
    return ids;
}

std::optional<double> GroupRates::selection_rate(int a) const
{
    const Index n = group_count(a);
    if (n == 0) {
        return std::nullopt;
    }
    return static_cast<double>(group_positive(a)) / static_cast<double>(n);
}

std::optional<double> GroupRates::positive_rate(int y, int a) const
{
    if (count[y][a] == 0) {
        return std::nullopt;
    }
    return static_cast<double>(positive[y][a]) / static_cast<double>(count[y][a]);
}

GroupRates group_rates(const VectorXi& preds, const VectorXi& labels, const VectorXi& protected_attr)
{
    if (preds.size() != labels.size() || preds.size() != protected_attr.size()) {
        throw DataError("group_rates: prediction, label and protected vectors differ in length");
    }
    if (preds.size() == 0) {
        throw DataError("group_rates: empty input");
    }
    GroupRates gr;
    for (Index i = 0; i < preds.size(); ++i) {
        const int y = labels(i);
        const int a = protected_attr(i);
        if ((y != 0 && y != 1) || (a != 0 && a != 1) || (preds(i) != 0 && preds(i) != 1)) {
            throw DataError("group_rates: inputs must be binary");
        }
        ++gr.count[y][a];
        gr.positive[y][a] += preds(i);
    }
    return gr;
}

namespace {

double rate_gap(const GroupRates& gr, int y)
{
    const auto r0 = gr.positive_rate(y, 0);
    const auto r1 = gr.positive_rate(y, 1);
    if (!r0 || !r1) {
        throw UndefinedMetric(std::string("empty (Y=") + std::to_string(y) + ", A=" + (r0 ? "1" : "0") + ") cell");
    }
    return std::abs(*r0 - *r1);
}

} // namespace

double demographic_parity(const GroupRates& gr)
{
    const auto r0 = gr.selection_rate(0);
    const auto r1 = gr.selection_rate(1);
    if (!r0 || !r1) {
        throw UndefinedMetric("empty protected group");
    }
    return std::abs(*r0 - *r1);
}

double false_positive_diff(const GroupRates& gr)
{
    return rate_gap(gr, 0);
}

double true_positive_diff(const GroupRates& gr)
{
    return rate_gap(gr, 1);
}

double equalized_odds(const GroupRates& gr)
{
    return std::max(false_positive_diff(gr), true_positive_diff(gr));
}

double metric(FairnessMetricId id, const GroupRates& gr)
{
    switch (id) {
    case FairnessMetricId::dp: return demographic_parity(gr);
    case FairnessMetricId::eo: return equalized_odds(gr);
    case FairnessMetricId::fp: return false_positive_diff(gr);
    case FairnessMetricId::tp: return true_positive_diff(gr);
    }
    throw ConfigError("unknown fairness metric");
}

double metric(FairnessMetricId id, const VectorXi& preds, const VectorXi& labels, const VectorXi& protected_attr)
{
    return metric(id, group_rates(preds, labels, protected_attr));
}

} // namespace fairrobust
