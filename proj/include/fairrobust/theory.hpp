#pragma once

#include "fairrobust/dataset.hpp"
#include "fairrobust/models.hpp"
#include "fairrobust/strategies.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace fairrobust {

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureSpec {
    double abs_tol = 1e-10;
    int initial_panels = 16;
    int max_panels = 20000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

// Adaptive Gauss-Kronrod (7, 15) on a finite interval. Throws ValidationError
// when the error estimate does not fall below abs_tol within max_panels.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi, const QuadratureSpec& spec = {});
// Same, integrating separately between interior breakpoints (kinks of f).
// The error estimate of a panel that straddles a kink is unreliable.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi, const std::vector<double>& breakpoints,
                           const QuadratureSpec& spec = {});

// <u, v> = integral of u(x) v(x) over [lo, hi].
double l2_inner_product(const std::function<double(double)>& u, const std::function<double(double)>& v, double lo, double hi,
                        const QuadratureSpec& spec = {});

// ---------------------------------------------------------------------------
// Bhattacharyya coefficient and distance

// Continuous density given by its log-density, supported (numerically) on [lo, hi].
struct Density {
    std::function<double(double)> log_pdf;
    double lo = 0.0;
    double hi = 0.0;
};

// Probability vector over a shared finite support.
struct DiscreteDistribution {
    VectorXd probs;
};

using Distribution = std::variant<Density, DiscreteDistribution>;

struct Bhattacharyya {
    double coefficient = 0.0; // in [0, 1]
    double distance = 0.0;    // -ln(coefficient); +infinity for disjoint supports
};

Bhattacharyya bhattacharyya(const DiscreteDistribution& p, const DiscreteDistribution& q);
Bhattacharyya bhattacharyya(const Density& p, const Density& q, const QuadratureSpec& spec = {});
// Throws ConfigError for a mixed continuous/discrete pair.
Bhattacharyya bhattacharyya(const Distribution& p, const Distribution& q, const QuadratureSpec& spec = {});

struct GaussianSpec {
    double mu = 0.0;
    double sigma = 1.0;
};

// N(mu, sigma^2 + k^2) as a Density on mu +- 40 standard deviations.
Density gaussian_density(const GaussianSpec& g, double k = 0.0);

// D_B between N(mp, sp^2 + k^2) and N(mq, sq^2 + k^2):
//   (mp - mq)^2 / (4 (sp^2 + sq^2 + 2k^2)) + 1/2 ln((a + b) / (2 sqrt(ab)))
// with a = sp^2 + k^2, b = sq^2 + k^2.
template <typename Scalar>
Scalar bhattacharyya_gaussian(Scalar mp, Scalar sp, Scalar mq, Scalar sq, Scalar k)
{
    if (!(sp > Scalar(0)) || !(sq > Scalar(0))) {
        throw ConfigError("bhattacharyya_gaussian: sigma must be positive");
    }
    if (k < Scalar(0)) {
        throw ConfigError("bhattacharyya_gaussian: k must be non-negative");
    }
    using std::log1p;
    using std::sqrt;
    const Scalar a = sp * sp + k * k;
    const Scalar b = sq * sq + k * k;
    const Scalar d = mp - mq;
    const Scalar first = d * d / (Scalar(4) * (a + b));
    // (a + b) / (2 sqrt(ab)) = 1 + (sqrt(a) - sqrt(b))^2 / (2 sqrt(ab))
    const Scalar gap = sqrt(a) - sqrt(b);
    const Scalar second = Scalar(0.5) * log1p(gap * gap / (Scalar(2) * sqrt(a) * sqrt(b)));
    return first + second;
}

double bhattacharyya_gaussian(const GaussianSpec& p, const GaussianSpec& q, double k);

struct ConvergenceReport {
    std::vector<double> k;
    std::vector<double> closed_form;
    std::vector<double> quadrature;
    // Mean-difference and variance-ratio terms of the closed form, reported only.
    std::vector<double> mean_term;
    std::vector<double> variance_term;
    bool monotone = true;
    bool final_below_tolerance = true;
    bool quadrature_agrees = true;
    double max_disagreement = 0.0;
    // First grid point where the closed form increased: (k, previous, value).
    std::optional<std::array<double, 3>> counterexample;
    bool passed() const { return monotone && final_below_tolerance && quadrature_agrees; }
};

ConvergenceReport verify_convergence(const GaussianSpec& p, const GaussianSpec& q, const std::vector<double>& k_grid,
                                     double final_tolerance = 1e-4, double agreement_tolerance = 1e-6,
                                     const QuadratureSpec& spec = {});

// ---------------------------------------------------------------------------
// Equalized-odds bias under protected-attribute flips

struct EoBoundsInputs {
    // p[y][a] = P{F = 1 | f(X) = y, A = a}
    std::array<std::array<double, 2>, 2> p{};
    double k = 0.0;
    // joint[a] = P{Y = 1, A_c = a}
    std::array<double, 2> joint{};
    // Clean bias of the base classifier among Y = 1.
    double base_bias = 0.0;
};

struct BoundsReport {
    EoBoundsInputs inputs;
    double alpha = 0.0;
    double upper = 0.0;
    double lower = 0.0;     // signed: M (1 - k) sum_a (p[1][a] - p[0][a])
    double lower_abs = 0.0; // |lower|
    double exact = 0.0;     // alpha M (1 - k)
    // p[1][a] >= p[0][a] for both groups.
    bool sign_regime = false;

    std::optional<double> empirical;
    double sigma = 0.0;
    bool within_bounds = false; // lower - 3 sigma <= empirical <= upper + 3 sigma
    bool matches_exact = false; // |empirical - exact| <= 3 sigma
};

BoundsReport eo_bias_bounds(const EoBoundsInputs& inputs);

// Routes rows through the policy by a flipped attribute A_c (rate k) and
// measures the true-positive-rate gap with respect to the true A, averaged
// over n_draws flips. p[y][a] is read off the policy at the base model's
// hard labels, base_bias is the base model's clean true-positive-rate gap.
BoundsReport verify_eo_bounds_empirical(const ThresholdPolicy& policy, const Dataset& ds, double k, Index n_draws, Seed seed);

// ---------------------------------------------------------------------------
// Demographic parity when scores are uniform on [b1, b2]

// P{U > t} for U ~ Uniform[lo, hi].
double uniform_exceedance(double t, const ScoreRange& range);

// |sum_j p_j0 P{U > T_j0} - sum_j p_j1 P{U > T_j1}|
double max_dp_under_noise(const ThresholdPolicy& policy, const ScoreRange& range);

struct MonteCarloEstimate {
    double value = 0.0;
    double sigma = 0.0;
};

// n rows split evenly between the groups, scores uniform on the range.
MonteCarloEstimate max_dp_monte_carlo(const ThresholdPolicy& policy, const ScoreRange& range, Index n, Seed seed);

} // namespace fairrobust
