#include "fairrobust/strategies.hpp"

namespace fairrobust {

namespace {

VectorXd source_values(const Dataset& ds, const RemovedColumn& rc)
{
    const auto j = ds.find_column(rc.source);
    if (!j) {
        throw DataError("correlation remover: column '" + rc.source + "' not found");
    }
    const Column& col = ds.column(*j);
    if (rc.category.empty()) {
        if (col.kind != FeatureKind::continuous) {
            throw DataError("correlation remover: column '" + rc.source + "' was continuous at fit time");
        }
        return col.values;
    }
    if (col.kind != FeatureKind::discrete) {
        throw DataError("correlation remover: column '" + rc.source + "' was discrete at fit time");
    }
    VectorXd out = VectorXd::Zero(col.codes.size());
    for (std::size_t c = 0; c < col.categories.size(); ++c) {
        if (col.categories[c] == rc.category) {
            out = (col.codes.array() == static_cast<int>(c)).cast<double>();
            break;
        }
    }
    return out;
}

} // namespace

CorrelationRemover fit_correlation_remover(const Dataset& ds)
{
    CorrelationRemover cr;
    const VectorXd a = ds.protected_attr().cast<double>();
    cr.protected_mean = a.mean();
    const VectorXd centred = a.array() - cr.protected_mean;
    const double ss = centred.squaredNorm();
    if (!(ss > 0.0)) {
        throw DataError("correlation remover: protected attribute is constant");
    }
    for (const auto& col : ds.columns()) {
        if (col.kind == FeatureKind::continuous) {
            cr.columns.push_back(RemovedColumn{col.name, "", 0.0});
        } else {
            for (const auto& c : col.categories) {
                cr.columns.push_back(RemovedColumn{col.name, c, 0.0});
            }
        }
    }
    for (auto& rc : cr.columns) {
        rc.beta = centred.dot(source_values(ds, rc)) / ss;
    }
    return cr;
}

Dataset transform(const CorrelationRemover& cr, const Dataset& ds)
{
    const VectorXd centred = ds.protected_attr().cast<double>().array() - cr.protected_mean;
    std::vector<Column> out;
    out.reserve(cr.columns.size());
    for (const auto& rc : cr.columns) {
        const std::string name = rc.category.empty() ? rc.source : rc.source + "=" + rc.category;
        out.push_back(Column::continuous(name, source_values(ds, rc) - centred * rc.beta));
    }
    return ds.with_columns(std::move(out));
}

} // namespace fairrobust
