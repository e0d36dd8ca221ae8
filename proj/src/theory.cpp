#include "fairrobust/theory.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace fairrobust {

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo;
    double hi;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gk15(const std::function<double(double)>& f, double lo, double hi)
{
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double sum = f(c - x) + f(c + x);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) {
            gauss += kWg[j / 2] * sum;
        }
    }
    return Panel{lo, hi, kronrod * h, std::abs((kronrod - gauss) * h)};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi, const QuadratureSpec& spec)
{
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw ConfigError("integrate: interval must be finite with lo < hi");
    }
    if (!(spec.abs_tol > 0.0) || spec.initial_panels < 1 || spec.max_panels < spec.initial_panels) {
        throw ConfigError("integrate: invalid quadrature settings");
    }
    std::priority_queue<Panel> panels;
    double value = 0.0;
    double error = 0.0;
    const double width = (hi - lo) / spec.initial_panels;
    for (int i = 0; i < spec.initial_panels; ++i) {
        const double a = lo + width * i;
        const double b = i + 1 == spec.initial_panels ? hi : lo + width * (i + 1);
        Panel p = gk15(f, a, b);
        value += p.value;
        error += p.error;
        panels.push(p);
    }
    int count = spec.initial_panels;
    while (error > spec.abs_tol) {
        if (count >= spec.max_panels) {
            throw ValidationError("integrate: quadrature did not converge");
        }
        const Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Panel left = gk15(f, worst.lo, mid);
        const Panel right = gk15(f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
        ++count;
        // Re-sum occasionally so the running totals do not drift.
        if (count % 256 == 0) {
            auto copy = panels;
            value = 0.0;
            error = 0.0;
            while (!copy.empty()) {
                value += copy.top().value;
                error += copy.top().error;
                copy.pop();
            }
        }
    }
    return QuadratureResult{value, error, count};
}

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi, const std::vector<double>& breakpoints,
                           const QuadratureSpec& spec)
{
    std::vector<double> cuts{lo};
    for (double b : breakpoints) {
        if (b > lo && b < hi) {
            cuts.push_back(b);
        }
    }
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.push_back(hi);
    QuadratureResult total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i] < cuts[i + 1])) {
            continue;
        }
        const auto r = integrate(f, cuts[i], cuts[i + 1], spec);
        total.value += r.value;
        total.error += r.error;
        total.panels += r.panels;
    }
    return total;
}

double l2_inner_product(const std::function<double(double)>& u, const std::function<double(double)>& v, double lo, double hi,
                        const QuadratureSpec& spec)
{
    return integrate([&](double x) { return u(x) * v(x); }, lo, hi, spec).value;
}

Bhattacharyya bhattacharyya(const DiscreteDistribution& p, const DiscreteDistribution& q)
{
    if (p.probs.size() != q.probs.size() || p.probs.size() == 0) {
        throw ConfigError("bhattacharyya: discrete distributions need the same non-empty support");
    }
    if ((p.probs.array() < 0.0).any() || (q.probs.array() < 0.0).any()) {
        throw ConfigError("bhattacharyya: probabilities must be non-negative");
    }
    const double bc = std::clamp((p.probs.array() * q.probs.array()).sqrt().sum(), 0.0, 1.0);
    const double db = bc > 0.0 ? -std::log(bc) : std::numeric_limits<double>::infinity();
    return Bhattacharyya{bc, std::max(0.0, db)};
}

Bhattacharyya bhattacharyya(const Density& p, const Density& q, const QuadratureSpec& spec)
{
    const double lo = std::max(p.lo, q.lo);
    const double hi = std::min(p.hi, q.hi);
    if (!(lo < hi)) {
        return Bhattacharyya{0.0, std::numeric_limits<double>::infinity()};
    }
    auto log_integrand = [&](double x) { return 0.5 * (p.log_pdf(x) + q.log_pdf(x)); };
    // Integrate sqrt(pq) / exp(peak) so the tolerance is relative to the bulk of
    // the integrand, then add the peak back on the log scale.
    double peak = -std::numeric_limits<double>::infinity();
    constexpr int kProbe = 4001;
    for (int i = 0; i < kProbe; ++i) {
        peak = std::max(peak, log_integrand(lo + (hi - lo) * i / (kProbe - 1)));
    }
    if (!std::isfinite(peak)) {
        return Bhattacharyya{0.0, std::numeric_limits<double>::infinity()};
    }
    QuadratureSpec local = spec;
    local.initial_panels = std::max(spec.initial_panels, 64);
    const double scaled = integrate(
                              [&](double x) {
                                  const double v = std::exp(log_integrand(x) - peak);
                                  return std::isfinite(v) ? std::max(v, 0.0) : 0.0;
                              },
                              lo, hi, local)
                              .value;
    if (!(scaled > 0.0)) {
        return Bhattacharyya{0.0, std::numeric_limits<double>::infinity()};
    }
    const double db = std::max(0.0, -(peak + std::log(scaled)));
    return Bhattacharyya{std::exp(-db), db};
}

Bhattacharyya bhattacharyya(const Distribution& p, const Distribution& q, const QuadratureSpec& spec)
{
    if (p.index() != q.index()) {
        throw ConfigError("bhattacharyya: cannot compare a continuous with a discrete distribution");
    }
    if (const auto* dp = std::get_if<DiscreteDistribution>(&p)) {
        return bhattacharyya(*dp, std::get<DiscreteDistribution>(q));
    }
    return bhattacharyya(std::get<Density>(p), std::get<Density>(q), spec);
}

Density gaussian_density(const GaussianSpec& g, double k)
{
    if (!(g.sigma > 0.0)) {
        throw ConfigError("gaussian_density: sigma must be positive");
    }
    const double var = g.sigma * g.sigma + k * k;
    const double sd = std::sqrt(var);
    const double log_norm = -0.5 * std::log(2.0 * M_PI * var);
    const double mu = g.mu;
    return Density{[=](double x) { return log_norm - 0.5 * (x - mu) * (x - mu) / var; }, mu - 40.0 * sd, mu + 40.0 * sd};
}

double bhattacharyya_gaussian(const GaussianSpec& p, const GaussianSpec& q, double k)
{
    return bhattacharyya_gaussian<double>(p.mu, p.sigma, q.mu, q.sigma, k);
}

ConvergenceReport verify_convergence(const GaussianSpec& p, const GaussianSpec& q, const std::vector<double>& k_grid,
                                     double final_tolerance, double agreement_tolerance, const QuadratureSpec& spec)
{
    if (k_grid.empty()) {
        throw ConfigError("verify_convergence: empty k grid");
    }
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        if (k_grid[i] < 0.0 || (i > 0 && !(k_grid[i] > k_grid[i - 1]))) {
            throw ConfigError("verify_convergence: k grid must be non-negative and increasing");
        }
    }
    ConvergenceReport r;
    r.k = k_grid;
    for (double k : k_grid) {
        const double closed = bhattacharyya_gaussian(p, q, k);
        const double a = p.sigma * p.sigma + k * k;
        const double b = q.sigma * q.sigma + k * k;
        const double d = p.mu - q.mu;
        r.mean_term.push_back(d * d / (4.0 * (a + b)));
        r.variance_term.push_back(closed - r.mean_term.back());
        const double quad = bhattacharyya(gaussian_density(p, k), gaussian_density(q, k), spec).distance;
        r.closed_form.push_back(closed);
        r.quadrature.push_back(quad);
        r.max_disagreement = std::max(r.max_disagreement, std::abs(closed - quad));
        const std::size_t i = r.closed_form.size() - 1;
        if (i > 0 && closed > r.closed_form[i - 1] && r.monotone) {
            r.monotone = false;
            r.counterexample = std::array<double, 3>{k, r.closed_form[i - 1], closed};
        }
    }
    r.quadrature_agrees = r.max_disagreement <= agreement_tolerance;
    r.final_below_tolerance = r.closed_form.back() < final_tolerance;
    return r;
}

BoundsReport eo_bias_bounds(const EoBoundsInputs& in)
{
    if (!(in.k >= 0.0 && in.k <= 1.0)) {
        throw ConfigError("eo_bias_bounds: k must lie in [0, 1]");
    }
    for (int a = 0; a < 2; ++a) {
        if (!(in.joint[a] > 0.0 && in.joint[a] <= 1.0)) {
            throw DataError("eo_bias_bounds: joint mass P{Y=1, A_c=a} must lie in (0, 1]");
        }
        for (int y = 0; y < 2; ++y) {
            if (!(in.p[y][a] >= 0.0 && in.p[y][a] <= 1.0)) {
                throw ConfigError("eo_bias_bounds: p[y][a] must lie in [0, 1]");
            }
        }
    }
    BoundsReport r;
    r.inputs = in;
    double gap_sum = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double gap = in.p[1][a] - in.p[0][a];
        r.alpha += std::abs(gap / in.joint[a]);
        gap_sum += gap;
    }
    r.sign_regime = in.p[1][0] >= in.p[0][0] && in.p[1][1] >= in.p[0][1];
    r.upper = r.alpha * in.base_bias;
    r.lower = in.base_bias * (1.0 - in.k) * gap_sum;
    r.lower_abs = std::abs(r.lower);
    r.exact = r.alpha * in.base_bias * (1.0 - in.k);
    return r;
}

namespace {

double tpr_gap(const VectorXi& preds, const VectorXi& labels, const VectorXi& groups, std::array<double, 2>* rates,
               std::array<Index, 2>* counts)
{
    std::array<Index, 2> n{};
    std::array<Index, 2> hit{};
    for (Index i = 0; i < preds.size(); ++i) {
        if (labels(i) == 1) {
            ++n[groups(i)];
            hit[groups(i)] += preds(i);
        }
    }
    if (n[0] == 0 || n[1] == 0) {
        throw UndefinedMetric("empty (Y=1, A=a) cell");
    }
    const std::array<double, 2> r{static_cast<double>(hit[0]) / n[0], static_cast<double>(hit[1]) / n[1]};
    if (rates) {
        *rates = r;
    }
    if (counts) {
        *counts = n;
    }
    return std::abs(r[0] - r[1]);
}

} // namespace

BoundsReport verify_eo_bounds_empirical(const ThresholdPolicy& policy, const Dataset& ds, double k, Index n_draws, Seed seed)
{
    if (!(k >= 0.0 && k <= 1.0)) {
        throw ConfigError("verify_eo_bounds_empirical: k must lie in [0, 1]");
    }
    if (n_draws < 1) {
        throw ConfigError("verify_eo_bounds_empirical: n_draws must be at least 1");
    }
    const VectorXd s = scores(policy.model, ds);
    const VectorXi& y = ds.labels();
    const VectorXi& a = ds.protected_attr();
    const Index n = ds.rows();

    EoBoundsInputs in;
    in.k = k;
    VectorXi hard(n);
    std::array<std::array<double, 2>, 2> p_sum{};
    std::array<std::array<Index, 2>, 2> p_count{};
    for (Index i = 0; i < n; ++i) {
        hard(i) = label_from_score(s(i));
        p_sum[hard(i)][a(i)] += positive_probability(policy.groups[a(i)], s(i));
        ++p_count[hard(i)][a(i)];
    }
    for (int yy = 0; yy < 2; ++yy) {
        for (int g = 0; g < 2; ++g) {
            if (p_count[yy][g] == 0) {
                throw UndefinedMetric("verify_eo_bounds_empirical: empty (f(X)=y, A=a) cell");
            }
            in.p[yy][g] = p_sum[yy][g] / static_cast<double>(p_count[yy][g]);
        }
    }
    in.base_bias = tpr_gap(hard, y, a, nullptr, nullptr);

    double total = 0.0;
    double variance = 0.0;
    std::array<double, 2> joint{};
    for (Index d = 0; d < n_draws; ++d) {
        NoiseStream stream(derive_seed(seed, {0xF11Du, static_cast<std::uint64_t>(d)}));
        const VectorXi ac = flip_binary(a, k, stream);
        for (Index i = 0; i < n; ++i) {
            if (y(i) == 1) {
                joint[ac(i)] += 1.0;
            }
        }
        const Seed coin = derive_seed(seed, {0xC01Du, static_cast<std::uint64_t>(d)});
        VectorXi preds(n);
        for (Index i = 0; i < n; ++i) {
            preds(i) = row_coin(coin, i) < positive_probability(policy.groups[ac(i)], s(i)) ? 1 : 0;
        }
        std::array<double, 2> rates{};
        std::array<Index, 2> counts{};
        total += tpr_gap(preds, y, a, &rates, &counts);
        variance += rates[0] * (1.0 - rates[0]) / counts[0] + rates[1] * (1.0 - rates[1]) / counts[1];
    }
    for (int g = 0; g < 2; ++g) {
        in.joint[g] = joint[g] / (static_cast<double>(n_draws) * static_cast<double>(n));
    }

    BoundsReport r = eo_bias_bounds(in);
    const double draws = static_cast<double>(n_draws);
    r.empirical = total / draws;
    // Standard error of the mean of n_draws binomial gap estimates.
    r.sigma = std::sqrt(variance / draws / draws);
    const double tol = 3.0 * r.sigma;
    r.within_bounds = *r.empirical >= r.lower - tol && *r.empirical <= r.upper + tol;
    r.matches_exact = std::abs(*r.empirical - r.exact) <= tol;
    return r;
}

double uniform_exceedance(double t, const ScoreRange& range)
{
    if (!(range.lo < range.hi)) {
        throw ConfigError("score range requires lo < hi");
    }
    return std::clamp((range.hi - t) / (range.hi - range.lo), 0.0, 1.0);
}

double max_dp_under_noise(const ThresholdPolicy& policy, const ScoreRange& range)
{
    std::array<double, 2> rate{};
    for (int g = 0; g < 2; ++g) {
        const auto& th = policy.groups[g];
        rate[g] = th.p1 * uniform_exceedance(th.t1, range) + th.p0 * uniform_exceedance(th.t0, range);
    }
    return std::abs(rate[0] - rate[1]);
}

MonteCarloEstimate max_dp_monte_carlo(const ThresholdPolicy& policy, const ScoreRange& range, Index n, Seed seed)
{
    if (n < 2) {
        throw ConfigError("max_dp_monte_carlo: n must be at least 2");
    }
    if (!(range.lo < range.hi)) {
        throw ConfigError("score range requires lo < hi");
    }
    Rng rng(derive_seed(seed, {0x3D90u}));
    std::array<Index, 2> count{};
    std::array<Index, 2> positive{};
    for (Index i = 0; i < n; ++i) {
        const int g = static_cast<int>(i % 2);
        const double s = range.lo + (range.hi - range.lo) * rng.uniform();
        ++count[g];
        positive[g] += randomized_predict(policy.groups[g], s, rng.uniform());
    }
    const double r0 = static_cast<double>(positive[0]) / count[0];
    const double r1 = static_cast<double>(positive[1]) / count[1];
    return MonteCarloEstimate{std::abs(r0 - r1), std::sqrt(r0 * (1 - r0) / count[0] + r1 * (1 - r1) / count[1])};
}

} // namespace fairrobust
