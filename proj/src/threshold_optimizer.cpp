#include "fairrobust/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace fairrobust {

double positive_probability(const GroupThresholds& g, double score)
{
    return (score > g.t1 ? g.p1 : 0.0) + (score >= g.t0 ? g.p0 : 0.0);
}

int randomized_predict(const GroupThresholds& g, double score, double uniform)
{
    return uniform < positive_probability(g, score) ? 1 : 0;
}

int randomized_predict(const ThresholdPolicy& policy, const FeatureRow& row, int a, NoiseStream& stream)
{
    if (a != 0 && a != 1) {
        throw DataError("randomized_predict: group must be 0 or 1");
    }
    return randomized_predict(policy.groups[static_cast<std::size_t>(a)], score(policy.model, row), stream.rng().uniform());
}

double row_coin(Seed seed, Index i)
{
    return static_cast<double>(derive_seed(seed, {0xC014u, static_cast<std::uint64_t>(i)}) >> 11) * 0x1.0p-53;
}

VectorXd positive_probabilities(const ThresholdPolicy& policy, const VectorXd& scores, const VectorXi& groups)
{
    if (scores.size() != groups.size()) {
        throw DataError("positive_probabilities: score and group vectors differ in length");
    }
    VectorXd p(scores.size());
    for (Index i = 0; i < scores.size(); ++i) {
        p(i) = positive_probability(policy.groups[static_cast<std::size_t>(groups(i))], scores(i));
    }
    return p;
}

VectorXi randomized_predict(const ThresholdPolicy& policy, const VectorXd& scores, const VectorXi& groups, Seed coin_seed)
{
    const VectorXd p = positive_probabilities(policy, scores, groups);
    VectorXi out(p.size());
    for (Index i = 0; i < p.size(); ++i) {
        out(i) = row_coin(coin_seed, i) < p(i) ? 1 : 0;
    }
    return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Threshold grid for one group, from +inf down to -inf, with the point each
// threshold yields. For eo the point is (FPR, TPR); for dp it is
// (selection rate, gain) where gain = (positives - negatives above) / N.
struct Curve {
    std::vector<double> thresholds;
    std::vector<Point> points;
};

Curve group_curve(const VectorXd& scores, const VectorXi& labels, const VectorXi& groups, int a, FairnessMetricId constraint)
{
    std::vector<Index> rows;
    for (Index i = 0; i < scores.size(); ++i) {
        if (groups(i) == a) {
            rows.push_back(i);
        }
    }
    Index pos = 0;
    for (Index i : rows) {
        pos += labels(i);
    }
    const Index neg = static_cast<Index>(rows.size()) - pos;
    if (rows.empty()) {
        throw UndefinedMetric("threshold optimizer: empty protected group");
    }
    if (constraint != FairnessMetricId::dp && (pos == 0 || neg == 0)) {
        throw UndefinedMetric("threshold optimizer: a group lacks one of the labels");
    }
    std::sort(rows.begin(), rows.end(), [&](Index l, Index r) { return scores(l) > scores(r); });

    const double n_total = static_cast<double>(scores.size());
    const double n_group = static_cast<double>(rows.size());
    auto point = [&](Index pos_above, Index neg_above) {
        if (constraint == FairnessMetricId::dp) {
            return Point{static_cast<double>(pos_above + neg_above) / n_group,
                         static_cast<double>(pos_above - neg_above) / n_total};
        }
        return Point{static_cast<double>(neg_above) / static_cast<double>(neg),
                     static_cast<double>(pos_above) / static_cast<double>(pos)};
    };

    Curve c;
    c.thresholds.push_back(kInf);
    c.points.push_back(point(0, 0));
    Index pos_above = 0;
    Index neg_above = 0;
    std::size_t i = 0;
    while (i < rows.size()) {
        const double s = scores(rows[i]);
        while (i < rows.size() && scores(rows[i]) == s) {
            pos_above += labels(rows[i]);
            neg_above += 1 - labels(rows[i]);
            ++i;
        }
        double t = -kInf;
        if (i < rows.size()) {
            const double lower = scores(rows[i]);
            t = lower + (s - lower) / 2.0;
            if (!(t < s)) {
                t = lower;
            }
        }
        c.thresholds.push_back(t);
        c.points.push_back(point(pos_above, neg_above));
    }
    return c;
}

double cross(Point o, Point a, Point b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Indices of the upper concave hull of points already sorted by x (ties
// impossible except at equal points, which are skipped).
std::vector<std::size_t> upper_hull(const std::vector<Point>& pts)
{
    std::vector<std::size_t> h;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!h.empty() && pts[h.back()].x == pts[i].x && pts[h.back()].y >= pts[i].y) {
            continue;
        }
        while (!h.empty() && pts[h.back()].x == pts[i].x) {
            h.pop_back();
        }
        while (h.size() >= 2 && cross(pts[h[h.size() - 2]], pts[h.back()], pts[i]) >= 0.0) {
            h.pop_back();
        }
        h.push_back(i);
    }
    return h;
}

GroupThresholds pure(double t)
{
    return GroupThresholds{t, t, 0.0, 1.0};
}

// Mixture q * (threshold ti) + (1 - q) * (threshold tj), ti > tj.
GroupThresholds mix(double ti, double tj, double q)
{
    q = std::clamp(q, 0.0, 1.0);
    if (q == 1.0) {
        return pure(ti);
    }
    if (q == 0.0) {
        return pure(tj);
    }
    return GroupThresholds{tj, ti, 1.0 - q, q};
}

double band(const GroupThresholds& g)
{
    if (g.p0 == 0.0 || g.t0 == g.t1) {
        return 0.0;
    }
    return g.t1 - g.t0;
}

struct Candidate {
    double objective = -kInf;
    double band = kInf;
    std::array<GroupThresholds, 2> groups;
};

void consider(Candidate& best, double objective, const GroupThresholds& g0, const GroupThresholds& g1)
{
    const double b = band(g0) + band(g1);
    if (objective > best.objective + kTieTol || (objective >= best.objective - kTieTol && b < best.band)) {
        best = Candidate{objective, b, {g0, g1}};
    }
}

struct Chord {
    std::size_t i = 0; // higher threshold
    std::size_t j = 0; // lower threshold; i == j for a single vertex
};

std::vector<Chord> chords(const std::vector<std::size_t>& hull)
{
    std::vector<Chord> out;
    for (std::size_t u = 0; u < hull.size(); ++u) {
        for (std::size_t v = u + 1; v < hull.size(); ++v) {
            out.push_back(Chord{hull[u], hull[v]});
        }
    }
    return out;
}

// Realizes point p on chord c of curve g, or nullopt if p is off the chord.
std::optional<GroupThresholds> realize_on_chord(const Curve& g, const Chord& c, Point p)
{
    const Point vi = g.points[c.i];
    const Point vj = g.points[c.j];
    const double dx = vi.x - vj.x;
    const double dy = vi.y - vj.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) {
        return std::nullopt;
    }
    const double q = ((p.x - vj.x) * dx + (p.y - vj.y) * dy) / len2;
    if (q < -1e-12 || q > 1.0 + 1e-12) {
        return std::nullopt;
    }
    const double px = vj.x + q * dx - p.x;
    const double py = vj.y + q * dy - p.y;
    if (px * px + py * py > 1e-24) {
        return std::nullopt;
    }
    return mix(g.thresholds[c.i], g.thresholds[c.j], q);
}

std::array<GroupThresholds, 2> fit_eo(const std::array<Curve, 2>& curves, double pi0, double pi1)
{
    std::array<std::vector<std::size_t>, 2> hull;
    std::array<std::vector<Chord>, 2> ch;
    for (int a = 0; a < 2; ++a) {
        hull[a] = upper_hull(curves[a].points);
        ch[a] = chords(hull[a]);
    }
    auto objective = [&](Point p) { return pi1 * p.y - pi0 * p.x; };

    Candidate best;
    // Vertices of one hull lying on a chord (or vertex) of the other.
    for (int a = 0; a < 2; ++a) {
        const int b = 1 - a;
        for (std::size_t v : hull[a]) {
            const Point p = curves[a].points[v];
            const GroupThresholds ga = pure(curves[a].thresholds[v]);
            for (std::size_t w : hull[b]) {
                const Point q = curves[b].points[w];
                if (std::abs(q.x - p.x) <= 1e-12 && std::abs(q.y - p.y) <= 1e-12) {
                    const GroupThresholds gb = pure(curves[b].thresholds[w]);
                    consider(best, objective(p), a == 0 ? ga : gb, a == 0 ? gb : ga);
                }
            }
            for (const auto& c : ch[b]) {
                if (auto gb = realize_on_chord(curves[b], c, p)) {
                    consider(best, objective(p), a == 0 ? ga : *gb, a == 0 ? *gb : ga);
                }
            }
        }
    }
    // Proper crossings of a chord of group 0 with a chord of group 1.
    for (const auto& c0 : ch[0]) {
        const Point a0 = curves[0].points[c0.i];
        const Point a1 = curves[0].points[c0.j];
        for (const auto& c1 : ch[1]) {
            const Point b0 = curves[1].points[c1.i];
            const Point b1 = curves[1].points[c1.j];
            const double rx = a1.x - a0.x, ry = a1.y - a0.y;
            const double sx = b1.x - b0.x, sy = b1.y - b0.y;
            const double denom = rx * sy - ry * sx;
            if (std::abs(denom) < 1e-15) {
                continue;
            }
            const double t = ((b0.x - a0.x) * sy - (b0.y - a0.y) * sx) / denom;
            const double u = ((b0.x - a0.x) * ry - (b0.y - a0.y) * rx) / denom;
            if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) {
                continue;
            }
            const Point p{a0.x + t * rx, a0.y + t * ry};
            // Weight on the higher-threshold end is 1 - t (resp. 1 - u).
            const GroupThresholds g0 = mix(curves[0].thresholds[c0.i], curves[0].thresholds[c0.j], 1.0 - t);
            const GroupThresholds g1 = mix(curves[1].thresholds[c1.i], curves[1].thresholds[c1.j], 1.0 - u);
            consider(best, objective(p), g0, g1);
        }
    }
    if (!std::isfinite(best.objective)) {
        throw ValidationError("threshold optimizer: no feasible equalized-odds point");
    }
    return best.groups;
}

// Value and realization of the upper hull of one dp curve at selection rate s.
std::pair<double, GroupThresholds> hull_at(const Curve& g, const std::vector<std::size_t>& hull, double s)
{
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const Point v = g.points[hull[k]];
        if (v.x == s) {
            return {v.y, pure(g.thresholds[hull[k]])};
        }
        if (k + 1 < hull.size() && v.x < s && s < g.points[hull[k + 1]].x) {
            const Point w = g.points[hull[k + 1]];
            const double q = (w.x - s) / (w.x - v.x);
            return {q * v.y + (1.0 - q) * w.y, mix(g.thresholds[hull[k]], g.thresholds[hull[k + 1]], q)};
        }
    }
    throw ValidationError("threshold optimizer: selection rate outside [0, 1]");
}

std::array<GroupThresholds, 2> fit_dp(const std::array<Curve, 2>& curves)
{
    std::array<std::vector<std::size_t>, 2> hull;
    std::vector<double> rates;
    for (int a = 0; a < 2; ++a) {
        hull[a] = upper_hull(curves[a].points);
        for (std::size_t v : hull[a]) {
            rates.push_back(curves[a].points[v].x);
        }
    }
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
    Candidate best;
    for (double s : rates) {
        const auto [v0, g0] = hull_at(curves[0], hull[0], s);
        const auto [v1, g1] = hull_at(curves[1], hull[1], s);
        consider(best, v0 + v1, g0, g1);
    }
    return best.groups;
}

} // namespace

ThresholdPolicy fit_threshold_optimizer(const VectorXd& scores, const VectorXi& labels, const VectorXi& protected_attr,
                                        FairnessMetricId constraint)
{
    if (scores.size() != labels.size() || scores.size() != protected_attr.size()) {
        throw DataError("threshold optimizer: input vectors differ in length");
    }
    if (constraint == FairnessMetricId::fp || constraint == FairnessMetricId::tp) {
        throw ConfigError("threshold optimizer: constraint must be dp or eo");
    }
    std::array<Curve, 2> curves{group_curve(scores, labels, protected_attr, 0, constraint),
                                group_curve(scores, labels, protected_attr, 1, constraint)};
    ThresholdPolicy policy;
    policy.constraint = constraint;
    if (constraint == FairnessMetricId::dp) {
        policy.groups = fit_dp(curves);
    } else {
        const double pi1 = labels.cast<double>().mean();
        policy.groups = fit_eo(curves, 1.0 - pi1, pi1);
    }
    return policy;
}

ThresholdPolicy fit_threshold_optimizer(const TrainedModel& model, const Dataset& ds, FairnessMetricId constraint)
{
    ThresholdPolicy policy = fit_threshold_optimizer(scores(model, ds), ds.labels(), ds.protected_attr(), constraint);
    policy.model = model;
    return policy;
}

std::string format_policy(const ThresholdPolicy& policy)
{
    std::string out;
    char buf[160];
    for (int a = 0; a < 2; ++a) {
        const auto& g = policy.groups[static_cast<std::size_t>(a)];
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g\n", a, g.t0, g.t1, g.p0, g.p1);
        out += buf;
    }
    return out;
}

std::array<GroupThresholds, 2> parse_policy(const std::string& text)
{
    std::array<GroupThresholds, 2> groups;
    std::array<bool, 2> seen{};
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        int a = -1;
        std::string fields[4];
        if (!(ls >> a >> fields[0] >> fields[1] >> fields[2] >> fields[3]) || (a != 0 && a != 1)) {
            throw DataError("policy: malformed line '" + line + "'");
        }
        double v[4];
        for (int k = 0; k < 4; ++k) {
            char* end = nullptr;
            v[k] = std::strtod(fields[k].c_str(), &end);
            if (*end != '\0') {
                throw DataError("policy: malformed number '" + fields[k] + "'");
            }
        }
        groups[static_cast<std::size_t>(a)] = GroupThresholds{v[0], v[1], v[2], v[3]};
        seen[static_cast<std::size_t>(a)] = true;
    }
    if (!seen[0] || !seen[1]) {
        throw DataError("policy: both groups must be present");
    }
    return groups;
}

} // namespace fairrobust
