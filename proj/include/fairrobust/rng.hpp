#pragma once

#include "fairrobust/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fairrobust {

// SplitMix64 finalizer. Used both to expand seeds and to hash stream keys.
std::uint64_t splitmix64(std::uint64_t x);

// Derives a child seed from a parent seed and an ordered list of integer keys.
// derive_seed(s, {a, b}) == derive_seed(derive_seed(s, {a}), {b}).
Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> keys);

// Seeded generator with portable variate transforms.
//
// The engine is std::mt19937_64; the transforms to uniform, normal and Laplace
// variates are implemented here rather than through <random> distributions so
// that a given seed yields the same stream on every standard library.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1).
    double uniform_open()
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n > 0, by rejection.
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean = 0.0, double stddev = 1.0);

    // Laplace(0, scale) by inverse CDF.
    double laplace(double scale);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates shuffle of [0, n) driven by rng.
std::vector<Index> random_permutation(Index n, Rng& rng);

} // namespace fairrobust
