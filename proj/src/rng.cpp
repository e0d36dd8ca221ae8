#include "fairrobust/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace fairrobust {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> keys)
{
    Seed s = parent;
    for (auto key : keys) {
        s = splitmix64(s ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
    }
    return s;
}

std::uint64_t Rng::uniform_index(std::uint64_t n)
{
    // Discard the biased tail of the 64-bit range.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

double Rng::normal(double mean, double stddev)
{
    if (have_spare_) {
        have_spare_ = false;
        return mean + stddev * spare_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return mean + stddev * u * m;
}

double Rng::laplace(double scale)
{
    const double u = uniform_open() - 0.5;
    const double sign = u < 0.0 ? -1.0 : 1.0;
    return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

std::vector<Index> random_permutation(Index n, Rng& rng)
{
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

} // namespace fairrobust
