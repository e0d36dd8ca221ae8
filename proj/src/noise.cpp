#include "fairrobust/noise.hpp"

#include <algorithm>

namespace fairrobust {

VectorXd perturb_continuous(const VectorXd& column, double k, NoiseStream& stream)
{
    if (k < 0.0) {
        throw ConfigError("noise strength k must be non-negative");
    }
    if (k == 0.0) {
        return column;
    }
    VectorXd out(column.size());
    for (Index i = 0; i < column.size(); ++i) {
        out(i) = column(i) + stream.rng().laplace(k);
    }
    return out;
}

VectorXi perturb_discrete(const VectorXi& codes, double k, NoiseStream& stream)
{
    if (k < 0.0) {
        throw ConfigError("noise strength k must be non-negative");
    }
    if (codes.size() == 0) {
        throw DataError("cannot perturb an empty discrete column");
    }
    if (k == 0.0) {
        return codes;
    }
    const double rate = std::min(k / 100.0, 1.0);
    const auto n = static_cast<std::uint64_t>(codes.size());
    VectorXi out = codes;
    auto& rng = stream.rng();
    for (Index i = 0; i < codes.size(); ++i) {
        if (rate >= 1.0 || rng.bernoulli(rate)) {
            out(i) = codes(static_cast<Index>(rng.uniform_index(n)));
        }
    }
    return out;
}

VectorXi flip_binary(const VectorXi& values, double rate, NoiseStream& stream)
{
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ConfigError("flip rate must lie in [0, 1]");
    }
    VectorXi out = values;
    if (rate == 0.0) {
        return out;
    }
    for (Index i = 0; i < values.size(); ++i) {
        if (rate >= 1.0 || stream.rng().bernoulli(rate)) {
            out(i) = 1 - values(i);
        }
    }
    return out;
}

Dataset perturb_dataset(const Dataset& ds, const NoiseSpec& spec, NoiseCell cell, const PerturbOptions& options)
{
    if (spec.k < 0.0) {
        throw ConfigError("noise strength k must be non-negative");
    }
    std::vector<Column> cols = ds.columns();
    for (std::size_t j = 0; j < cols.size(); ++j) {
        NoiseStream stream(spec.master_seed, cell, j);
        auto& c = cols[j];
        if (c.kind == FeatureKind::continuous) {
            c.values = perturb_continuous(c.values, spec.k, stream);
        } else {
            c.codes = perturb_discrete(c.codes, spec.k, stream);
        }
    }
    if (options.protected_flip_rate) {
        NoiseStream stream(spec.master_seed, cell, NoiseStream::protected_column);
        return Dataset(std::move(cols), ds.labels(), flip_binary(ds.protected_attr(), *options.protected_flip_rate, stream),
                       {}, ds.label_name(), ds.protected_name());
    }
    return ds.with_columns(std::move(cols));
}

} // namespace fairrobust
