#pragma once

#include "fairrobust/dataset.hpp"
#include "fairrobust/rng.hpp"

#include <cmath>
#include <limits>

namespace fairrobust {

// Noise strength k and the master seed every stream is derived from.
// k is the Laplace scale for continuous columns and the replacement
// percentage for discrete columns; k = 0 is the identity.
struct NoiseSpec {
    double k = 0.0;
    Seed master_seed = 0;
};

// Position of one perturbation in the sweep grid.
struct NoiseCell {
    std::uint64_t k_index = 0;
    std::uint64_t repetition = 0;
};

// Independent stream for one (k index, repetition, column) triple.
class NoiseStream {
public:
    // Column index used for the protected-attribute flip stream.
    static constexpr std::uint64_t protected_column = std::numeric_limits<std::uint64_t>::max();

    NoiseStream(Seed master_seed, NoiseCell cell, std::uint64_t column)
        : seed_(derive_seed(master_seed, {0x4E01u, cell.k_index, cell.repetition, column}))
        , rng_(seed_)
    {
    }

    explicit NoiseStream(Seed seed) : seed_(seed), rng_(seed) {}

    Seed seed() const { return seed_; }
    Rng& rng() { return rng_; }

private:
    Seed seed_;
    Rng rng_;
};

template <typename Scalar>
Scalar laplace_pdf(Scalar x, Scalar k)
{
    if (!(k > Scalar(0))) {
        throw ConfigError("laplace_pdf requires k > 0");
    }
    return std::exp(-std::abs(x) / k) / (Scalar(2) * k);
}

template <typename Scalar>
Scalar laplace_cdf(Scalar x, Scalar k)
{
    if (!(k > Scalar(0))) {
        throw ConfigError("laplace_cdf requires k > 0");
    }
    if (x < Scalar(0)) {
        return Scalar(0.5) * std::exp(x / k);
    }
    return Scalar(1) - Scalar(0.5) * std::exp(-x / k);
}

// P{eps in [a, b]} for eps ~ Laplace(0, k); infinite endpoints allowed.
template <typename Scalar>
Scalar laplace_interval_prob(Scalar a, Scalar b, Scalar k)
{
    if (!(a < b)) {
        throw ConfigError("laplace_interval_prob requires a < b");
    }
    // Tails are subtracted on the side where they are small to keep precision.
    if (a >= Scalar(0)) {
        const Scalar upper = std::isinf(b) ? Scalar(0) : Scalar(0.5) * std::exp(-b / k);
        return Scalar(0.5) * std::exp(-a / k) - upper;
    }
    if (b <= Scalar(0)) {
        const Scalar lower = std::isinf(a) ? Scalar(0) : Scalar(0.5) * std::exp(a / k);
        return Scalar(0.5) * std::exp(b / k) - lower;
    }
    return laplace_cdf(b, k) - laplace_cdf(a, k);
}

// Adds independent Laplace(0, k) draws element-wise.
VectorXd perturb_continuous(const VectorXd& column, double k, NoiseStream& stream);

// Replaces each cell with probability min(k/100, 1) by a draw from the
// column's empirical distribution (a uniformly chosen cell of the original column).
VectorXi perturb_discrete(const VectorXi& codes, double k, NoiseStream& stream);

// Flips each binary value with probability rate in [0, 1].
VectorXi flip_binary(const VectorXi& values, double rate, NoiseStream& stream);

struct PerturbOptions {
    // When set, A is flipped at this rate in [0, 1] using its own stream.
    std::optional<double> protected_flip_rate;
};

// Perturbs every feature column; Y is never touched and A only on request.
Dataset perturb_dataset(const Dataset& ds, const NoiseSpec& spec, NoiseCell cell, const PerturbOptions& options = {});

} // namespace fairrobust
