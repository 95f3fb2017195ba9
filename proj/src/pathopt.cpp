#include "dispersia/pathopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dispersia {

namespace {

double product_distance(const Configuration& a, const Configuration& b) {
    const double dl = b.L - a.L;
    const double du = rotation_distance(a.U, b.U);
    const double dv = rotation_distance(a.V, b.V);
    return std::sqrt(dl * dl + du * du + dv * dv);
}

double orientation_distance(const std::pair<Rotation, Rotation>& a,
                            const std::pair<Rotation, Rotation>& b) {
    const double du = rotation_distance(a.first, b.first);
    const double dv = rotation_distance(a.second, b.second);
    return std::sqrt(du * du + dv * dv);
}

Configuration interpolate(const Configuration& a, const Configuration& b, double s) {
    return Configuration(a.L + s * (b.L - a.L), geodesic_interpolate(a.U, b.U, s),
                         geodesic_interpolate(a.V, b.V, s));
}

/// Geodesic legs from a to b avoiding the angle-pi log ambiguity by routing
/// through an axis-rotated waypoint when needed. Returns interior+end
/// rotations (a excluded).
std::vector<Rotation> safe_rotation_path(const Rotation& a, const Rotation& b) {
    if (rotation_distance(a, b) < M_PI - 1e-3) return {b};
    for (int axis = 0; axis < 3; ++axis) {
        const Rotation mid = a * exp_map(Generator::axis(axis), M_PI / 2.0);
        if (rotation_distance(a, mid) < M_PI - 1e-3 && rotation_distance(mid, b) < M_PI - 1e-3)
            return {mid, b};
    }
    throw DomainError("safe_rotation_path: could not route around the antipode");
}

} // namespace

void PathOnConfigSpace::validate() const {
    if (nodes.size() < 2) throw ValidationError("path needs at least 2 nodes");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (rotation_distance(nodes[i - 1].U, nodes[i].U) > M_PI - 1e-9 ||
            rotation_distance(nodes[i - 1].V, nodes[i].V) > M_PI - 1e-9)
            throw ValidationError("path: consecutive rotations at relative angle >= pi");
    }
}

Configuration PathOnConfigSpace::at(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    const std::size_t S = segments();
    const double scaled = t * static_cast<double>(S);
    std::size_t j = std::min(static_cast<std::size_t>(scaled), S - 1);
    const double s = scaled - static_cast<double>(j);
    if (s == 0.0) return nodes[j];
    return interpolate(nodes[j], nodes[j + 1], s);
}

PathOnConfigSpace PathOnConfigSpace::refined(int factor) const {
    if (factor < 1) throw DomainError("PathOnConfigSpace::refined: factor must be >= 1");
    std::vector<Configuration> out;
    out.reserve(segments() * factor + 1);
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j)
        for (int i = 0; i < factor; ++i)
            out.push_back(interpolate(nodes[j], nodes[j + 1], static_cast<double>(i) / factor));
    out.push_back(nodes.back());
    return PathOnConfigSpace(std::move(out));
}

namespace {

struct SegmentMax {
    double level;
    double s; // within-segment parameter of the max
};

/// Sampled max over one segment with golden-section sharpening around the
/// best sample. Ties keep the earlier parameter.
SegmentMax segment_max(const SurfaceFunction& surface, const Configuration& a,
                       const Configuration& b, int samples) {
    auto eval = [&](double s) { return surface(interpolate(a, b, s)); };
    double best_s = 0.0;
    double best = eval(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double s = static_cast<double>(i) / samples;
        const double v = eval(s);
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    // local refinement bracket
    double lo = std::max(0.0, best_s - 1.0 / samples);
    double hi = std::min(1.0, best_s + 1.0 / samples);
    const double inv_phi = 0.6180339887498948482;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > 1e-5) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
        const double v = std::max(f1, f2);
        const double s = (f1 >= f2) ? x1 : x2;
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    return {best, best_s};
}

std::vector<SegmentMax> all_segment_maxima(const SurfaceFunction& surface,
                                           const PathOnConfigSpace& path, int samples) {
    std::vector<SegmentMax> out(path.segments());
    for (std::size_t j = 0; j < path.segments(); ++j)
        out[j] = segment_max(surface, path.nodes[j], path.nodes[j + 1], samples);
    return out;
}

PathMaxResult combine_maxima(const std::vector<SegmentMax>& seg) {
    std::size_t best_j = 0;
    for (std::size_t j = 1; j < seg.size(); ++j)
        if (seg[j].level > seg[best_j].level) best_j = j;
    const double S = static_cast<double>(seg.size());
    return {seg[best_j].level, (static_cast<double>(best_j) + seg[best_j].s) / S};
}

} // namespace

PathMaxResult path_max(const SurfaceFunction& surface, const PathOnConfigSpace& path,
                       int samples_per_segment) {
    if (samples_per_segment < 2) throw DomainError("path_max: need at least 2 samples per segment");
    return combine_maxima(all_segment_maxima(surface, path, samples_per_segment));
}

// --- descent and criteria ----------------------------------------------------

DescentResult descend_to_pseudo_minimum(const OrientationFunction& f, const Rotation& U0,
                                        const Rotation& V0, std::uint64_t seed,
                                        const DescentOptions& opts) {
    std::vector<GeneratorPair> directions = generator_basis();
    {
        auto extra = random_generator_pairs(opts.random_directions, SplitRng(seed, 0xD15C0));
        directions.insert(directions.end(), extra.begin(), extra.end());
    }
    std::vector<double> ladder;
    for (double s = opts.initial_step; s >= opts.step_floor * (1.0 - 1e-12); s /= 10.0)
        ladder.push_back(s);

    DescentResult result{U0, V0, {}, {}};
    double current = f(U0, V0);
    if (!std::isfinite(current)) throw DomainError("descend: non-finite start value");
    result.trace.push_back(current);
    result.waypoints.emplace_back(U0, V0);

    auto segment_ok = [&](const Rotation& Ua, const Rotation& Va, const Rotation& Ub,
                          const Rotation& Vb, double start_value) {
        if (!opts.segment_guard) return true;
        for (int i = 1; i <= 6; ++i) {
            const double s = static_cast<double>(i) / 7.0;
            const double v = f(geodesic_interpolate(Ua, Ub, s), geodesic_interpolate(Va, Vb, s));
            if (v > start_value) return false;
        }
        return true;
    };

    for (long moves = 0; moves < opts.move_cap; ++moves) {
        bool moved = false;
        for (double step : ladder) {
            double best_value = current;
            Rotation best_U = result.U, best_V = result.V;
            bool found = false;
            for (const auto& dir : directions)
                for (double sign : {1.0, -1.0}) {
                    const Rotation Un = exp_map(dir.A, sign * step) * result.U;
                    const Rotation Vn = exp_map(dir.B, sign * step) * result.V;
                    const double v = f(Un, Vn);
                    if (std::isfinite(v) && v < best_value &&
                        segment_ok(result.U, result.V, Un, Vn, current)) {
                        best_value = v;
                        best_U = Un;
                        best_V = Vn;
                        found = true;
                    }
                }
            if (found) {
                result.U = best_U;
                result.V = best_V;
                current = best_value;
                result.trace.push_back(current);
                result.waypoints.emplace_back(best_U, best_V);
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return result;
}

PseudoMinReport pseudo_min_criterion(const OrientationFunction& f, const Rotation& U,
                                     const Rotation& V, double delta) {
    if (!(delta > 0.0)) throw DomainError("pseudo_min_criterion: delta must be positive");
    std::vector<GeneratorPair> sample = generator_basis();
    {
        auto extra = random_generator_pairs(10, SplitRng(0xC0FFEEULL, 0x5A17));
        sample.insert(sample.end(), extra.begin(), extra.end());
    }
    auto fn = [&](const Rotation& u, const Rotation& v) { return f(u, v); };
    double d1_max = 0.0;
    double d2_min = std::numeric_limits<double>::infinity();
    for (const auto& dir : sample) {
        const auto d1 = directional_derivative(fn, U, V, dir, 1);
        const auto d2 = directional_derivative(fn, U, V, dir, 2);
        if (d1.error > delta / 10.0 || d2.error > delta / 10.0)
            throw ResolutionError("pseudo_min_criterion: derivative error estimate above delta/10");
        d1_max = std::max(d1_max, std::abs(d1.value));
        d2_min = std::min(d2_min, d2.value);
    }
    PseudoMinReport report;
    report.U = U.matrix();
    report.V = V.matrix();
    report.first_derivative_max = d1_max;
    report.second_derivative_min = d2_min;
    report.F_value = f(U, V);
    report.delta = delta;
    report.generator_sample_size = static_cast<int>(sample.size());
    report.pass = d1_max <= delta && d2_min >= -delta;
    return report;
}

// --- min-max string relaxation -----------------------------------------------

namespace {

void check_endpoint_minimum(const SurfaceFunction& surface, const Configuration& tau) {
    auto orient = [&](const Rotation& u, const Rotation& v) {
        return surface(Configuration(tau.L, u, v));
    };
    const PseudoMinReport rep = pseudo_min_criterion(orient, tau.U, tau.V, 1e-6);
    if (!rep.pass)
        throw PreconditionError("minmax_optimize: endpoint fails the orientation minimum check");
    const double h = 1e-5 * std::max(1.0, tau.L);
    if (tau.L <= surface.L_min + 1e-9) {
        // Boundary point of the admissible separations: only outward growth.
        const double fwd =
            (surface(Configuration(tau.L + h, tau.U, tau.V)) - surface(tau)) / h;
        if (fwd < -1e-6)
            throw PreconditionError("minmax_optimize: endpoint not an L-boundary minimum");
    } else {
        const double central = (surface(Configuration(tau.L + h, tau.U, tau.V)) -
                                surface(Configuration(tau.L - h, tau.U, tau.V))) /
                               (2.0 * h);
        if (std::abs(central) > 1e-5)
            throw PreconditionError("minmax_optimize: endpoint has a nonzero L-derivative");
    }
}

PathOnConfigSpace initial_string(const Configuration& tau0, const Configuration& tau1, int nodes) {
    // Skeleton with axis-routed waypoints when an endpoint pair is antipodal
    // (the relative log is otherwise undefined), then uniform resampling.
    std::vector<Configuration> skeleton;
    skeleton.push_back(tau0);
    const auto legsU = safe_rotation_path(tau0.U, tau1.U);
    const auto legsV = safe_rotation_path(tau0.V, tau1.V);
    const std::size_t legs = std::max(legsU.size(), legsV.size());
    for (std::size_t leg = 0; leg + 1 < legs; ++leg) {
        const double s = static_cast<double>(leg + 1) / legs;
        skeleton.emplace_back(tau0.L + s * (tau1.L - tau0.L),
                              leg < legsU.size() - 1 ? legsU[leg] : tau1.U,
                              leg < legsV.size() - 1 ? legsV[leg] : tau1.V);
    }
    skeleton.push_back(tau1);
    const PathOnConfigSpace coarse(std::move(skeleton));
    std::vector<Configuration> ns;
    ns.reserve(nodes);
    for (int i = 0; i < nodes; ++i)
        ns.push_back(coarse.at(static_cast<double>(i) / (nodes - 1)));
    return PathOnConfigSpace(std::move(ns));
}

PathOnConfigSpace equal_arclength(const PathOnConfigSpace& path) {
    const std::size_t n = path.nodes.size();
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + product_distance(path.nodes[i - 1], path.nodes[i]);
    const double total = cum.back();
    if (total <= 0.0) return path;
    std::vector<Configuration> out;
    out.reserve(n);
    out.push_back(path.nodes.front());
    std::size_t seg = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double target = total * static_cast<double>(i) / (n - 1);
        while (seg + 2 < n && cum[seg + 1] < target) ++seg;
        const double span = cum[seg + 1] - cum[seg];
        const double s = span > 0.0 ? (target - cum[seg]) / span : 0.0;
        out.push_back(interpolate(path.nodes[seg], path.nodes[seg + 1], std::clamp(s, 0.0, 1.0)));
    }
    out.push_back(path.nodes.back());
    return PathOnConfigSpace(std::move(out));
}

} // namespace

MinMaxResult minmax_optimize(const SurfaceFunction& surface, const Configuration& tau0,
                             const Configuration& tau1, int nodes, std::uint64_t seed,
                             int samples_per_segment, long move_cap) {
    if (nodes < 4) throw DomainError("minmax_optimize: need at least 4 nodes");
    check_endpoint_minimum(surface, tau0);
    check_endpoint_minimum(surface, tau1);

    PathOnConfigSpace path = initial_string(tau0, tau1, nodes);
    std::vector<SegmentMax> seg = all_segment_maxima(surface, path, samples_per_segment);
    PathMaxResult current = combine_maxima(seg);

    SplitRng rng(seed, 0x3A11);
    long iterations = 0;
    bool converged = false;
    double step = 0.25;
    const std::size_t S = path.segments();
    long sweep_index = 0;

    while (step >= 1e-5) {
        ++sweep_index;
        // Candidate directions: axis pairs plus a few seeded random ones.
        std::vector<GeneratorPair> dirs = generator_basis();
        {
            auto extra = random_generator_pairs(4, rng.split(sweep_index));
            dirs.insert(dirs.end(), extra.begin(), extra.end());
        }

        const std::size_t max_node = std::min(
            S - 1, std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(current.argmax_t * S))));

        bool accepted = false;
        for (std::size_t node : {max_node, max_node - 1, max_node + 1}) {
            if (node < 1 || node > S - 1) continue;

            double best_level = current.level;
            Configuration best_node = path.nodes[node];
            SegmentMax best_left{0, 0}, best_right{0, 0};
            bool found = false;

            auto try_candidate = [&](const Configuration& cand) {
                if (cand.L < surface.L_min) return;
                ++iterations;
                const SegmentMax left = segment_max(surface, path.nodes[node - 1], cand,
                                                    samples_per_segment);
                const SegmentMax right = segment_max(surface, cand, path.nodes[node + 1],
                                                     samples_per_segment);
                double level = std::max(left.level, right.level);
                for (std::size_t j = 0; j < S; ++j)
                    if (j != node - 1 && j != node) level = std::max(level, seg[j].level);
                if (level < best_level) {
                    best_level = level;
                    best_node = cand;
                    best_left = left;
                    best_right = right;
                    found = true;
                }
            };

            for (const auto& dir : dirs)
                for (double sign : {1.0, -1.0}) {
                    const Configuration& cur = path.nodes[node];
                    try_candidate(Configuration(cur.L, exp_map(dir.A, sign * step) * cur.U,
                                                exp_map(dir.B, sign * step) * cur.V));
                }
            for (double sign : {1.0, -1.0}) {
                const Configuration& cur = path.nodes[node];
                const double newL = std::max(surface.L_min, cur.L + sign * step);
                if (newL != cur.L) try_candidate(Configuration(newL, cur.U, cur.V));
            }

            if (found) {
                path.nodes[node] = best_node;
                seg[node - 1] = best_left;
                seg[node] = best_right;
                current = combine_maxima(seg);
                accepted = true;
                break;
            }
            if (iterations >= move_cap) break;
        }

        const double level_before_sweep = current.level;
        if (accepted) {
            // Keep nodes near-equal arclength; revert if it raises the level.
            PathOnConfigSpace repar = equal_arclength(path);
            auto repar_seg = all_segment_maxima(surface, repar, samples_per_segment);
            const PathMaxResult repar_level = combine_maxima(repar_seg);
            if (repar_level.level <= current.level) {
                path = std::move(repar);
                seg = std::move(repar_seg);
                current = repar_level;
            }
        } else {
            step /= 2.0;
        }
        // monotone descent of the level between accepted sweeps
        if (current.level > level_before_sweep + 1e-12)
            throw std::logic_error("minmax_optimize: path max increased during a sweep");
        if (iterations >= move_cap) break;
    }
    if (step < 1e-5) converged = true;

    return {current.level, current.argmax_t, path, iterations, converged};
}

// --- negativity and connectivity ----------------------------------------------

namespace {

OrientationFunction leading_term_function(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                          int n, int m) {
    return [&rho1, &rho2, n, m](const Rotation& U, const Rotation& V) {
        return interaction_coefficient(n, m, rotate_density(U, rho1), rotate_density(V, rho2));
    };
}

void check_octopole_hypothesis(const ChargeDensity& rho, int order, const char* which) {
    if (order != 3) return;
    const MultipoleTensor m3 = multipole_moment(rho, 3);
    const double smin = octopole_contraction_min_singular_value(m3);
    if (smin <= 1e-8 * std::max(1.0, m3.max_abs()))
        throw HypothesisError(std::string("octopole contraction map degenerate for ") + which);
}

} // namespace

NegativityReport negativity_at_pseudomin(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                         int n, int m, double delta, int trials,
                                         std::uint64_t seed) {
    if (n < 1 || m < 1 || n + m < 2 || n + m > 4)
        throw DomainError("negativity_at_pseudomin: need n,m >= 1 and n+m in {2,3,4}");
    if (trials < 1) throw DomainError("negativity_at_pseudomin: need at least one trial");
    check_octopole_hypothesis(rho1, n, "molecule 1");
    check_octopole_hypothesis(rho2, m, "molecule 2");

    const OrientationFunction f = leading_term_function(rho1, rho2, n, m);
    const auto starts = sample_so3_pairs(trials, seed);

    NegativityReport report;
    report.n = n;
    report.m = m;
    report.delta = delta;
    report.trials = trials;
    SplitRng rng(seed, 0xDE5C);
    for (int i = 0; i < trials; ++i) {
        const DescentResult d =
            descend_to_pseudo_minimum(f, starts[i].first, starts[i].second, rng.split(i).next_u64());
        report.endpoint_values.push_back(d.trace.back());
    }
    report.min_endpoint = *std::min_element(report.endpoint_values.begin(), report.endpoint_values.end());
    report.max_endpoint = *std::max_element(report.endpoint_values.begin(), report.endpoint_values.end());
    report.pass = report.max_endpoint <= -delta;
    return report;
}

NegativityReport negativity_at_pseudomin(int n, int m, double delta, int trials,
                                         std::uint64_t seed) {
    const ChargeDensity rho1 = unit_moment_density(n);
    const ChargeDensity rho2 = unit_moment_density(m);
    return negativity_at_pseudomin(rho1, rho2, n, m, delta, trials, seed);
}

namespace {

struct QuatPair {
    Eigen::Vector4d u;
    Eigen::Vector4d v;
};

double quat_angle(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return 2.0 * std::acos(std::min(1.0, std::abs(a.dot(b))));
}

double quat_pair_distance(const QuatPair& a, const QuatPair& b) {
    const double du = quat_angle(a.u, b.u);
    const double dv = quat_angle(a.v, b.v);
    return std::sqrt(du * du + dv * dv);
}

/// Largest MST edge of the complete graph on the samples in the product
/// metric: the radius at which the uniform sample becomes single-component.
double connectivity_radius(const std::vector<QuatPair>& pts) {
    const std::size_t n = pts.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<char> used(n, 0);
    dist[0] = 0.0;
    double largest = 0.0;
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!used[i] && (best == n || dist[i] < dist[best])) best = i;
        used[best] = 1;
        largest = std::max(largest, dist[best]);
        for (std::size_t i = 0; i < n; ++i)
            if (!used[i]) dist[i] = std::min(dist[i], quat_pair_distance(pts[best], pts[i]));
    }
    return largest;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

QuatPair to_quat_pair(const std::pair<Rotation, Rotation>& p) {
    return {matrix_to_quaternion(p.first.matrix()), matrix_to_quaternion(p.second.matrix())};
}

} // namespace

ConnectivityReport sublevel_connectivity(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                         int n, int m, double delta, int grid_n,
                                         std::uint64_t seed) {
    if (n + m < 2 || n + m > 4)
        throw DomainError("sublevel_connectivity: n+m must be in {2,3,4}");
    if (!(delta > 0.0)) throw DomainError("sublevel_connectivity: delta must be positive");
    if (grid_n < 16) throw DomainError("sublevel_connectivity: need at least 16 samples");

    const OrientationFunction f = leading_term_function(rho1, rho2, n, m);
    const auto samples = sample_so3_pairs(grid_n, seed);
    std::vector<QuatPair> quats(grid_n);
    std::vector<double> values(grid_n);
    std::vector<int> sublevel;
    for (int i = 0; i < grid_n; ++i) {
        quats[i] = to_quat_pair(samples[i]);
        values[i] = f(samples[i].first, samples[i].second);
        if (values[i] < -delta) sublevel.push_back(i);
    }

    ConnectivityReport report;
    report.n = n;
    report.m = m;
    report.delta = delta;
    report.samples = grid_n;
    report.sublevel_count = static_cast<int>(sublevel.size());
    report.nonempty = !sublevel.empty();
    if (sublevel.empty()) return report;

    report.radius = 1.2 * connectivity_radius(quats);

    UnionFind uf(static_cast<int>(sublevel.size()));
    for (std::size_t a = 0; a < sublevel.size(); ++a)
        for (std::size_t b = a + 1; b < sublevel.size(); ++b)
            if (quat_pair_distance(quats[sublevel[a]], quats[sublevel[b]]) <= report.radius)
                uf.unite(static_cast<int>(a), static_cast<int>(b));
    std::vector<int> roots;
    for (std::size_t a = 0; a < sublevel.size(); ++a) {
        const int r = uf.find(static_cast<int>(a));
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    report.components = static_cast<int>(roots.size());
    report.pass = report.components == 1;
    return report;
}

ConnectivityReport sublevel_connectivity(int n, int m, double delta, int grid_n,
                                         std::uint64_t seed) {
    const ChargeDensity rho1 = unit_moment_density(n);
    const ChargeDensity rho2 = unit_moment_density(m);
    return sublevel_connectivity(rho1, rho2, n, m, delta, grid_n, seed);
}

// --- bounded min-max path ------------------------------------------------------

double choose_L_cut(const EnergySurface& surface, double delta) {
    if (!(delta > 0.0)) throw DomainError("choose_L_cut: delta must be positive");
    const auto n1 = first_nonvanishing_order(surface.rho1);
    const auto n2 = first_nonvanishing_order(surface.rho2);
    if (!n1 || !n2) return surface.L_min; // van der Waals dominated at every L
    const int next = *n1 + *n2 + 1;
    double bound = 0.0;
    for (int n = 0; n <= next; ++n) {
        const int m = next - n;
        if (n > 4 || m > 4) continue;
        const double m1 = multipole_moment(surface.rho1, n).max_abs();
        const double m2 = multipole_moment(surface.rho2, m).max_abs();
        bound += std::abs(interaction_prefactor(n, m)) * std::pow(3.0, next) *
                 coulomb_derivatives(next).max_abs() * m1 * m2;
    }
    return std::max(surface.L_min, 2.0 * bound / delta);
}

namespace {

/// First and last global parameters at which L(t) = L_cut, for a path whose
/// endpoints sit strictly below L_cut.
std::pair<double, double> crossing_times(const PathOnConfigSpace& path, double L_cut) {
    const std::size_t S = path.segments();
    double t0 = -1.0, t1 = -1.0;
    for (std::size_t j = 0; j < S; ++j) {
        const double La = path.nodes[j].L, Lb = path.nodes[j + 1].L;
        if (t0 < 0.0 && La < L_cut && Lb >= L_cut) {
            const double s = (L_cut - La) / (Lb - La);
            t0 = (static_cast<double>(j) + s) / S;
        }
        if (La >= L_cut && Lb < L_cut) {
            const double s = (La - L_cut) / (La - Lb);
            t1 = (static_cast<double>(j) + s) / S;
        }
    }
    if (t0 < 0.0 || t1 < 0.0 || t1 < t0)
        throw PreconditionError("bounded_minmax_path: could not bracket the excursion");
    return {t0, t1};
}

/// Orientation waypoints strictly inside the sublevel linking start to goal
/// through the sampled graph, geodesically smoothed.
std::vector<std::pair<Rotation, Rotation>> sublevel_link(
    const OrientationFunction& F, const std::pair<Rotation, Rotation>& start,
    const std::pair<Rotation, Rotation>& goal, double delta,
    const std::vector<std::pair<Rotation, Rotation>>& samples,
    const std::vector<QuatPair>& quats, const std::vector<double>& values, double radius) {
    // Graph nodes: sublevel samples plus start (index n_s) and goal (n_s+1).
    std::vector<int> nodes;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] < -delta) nodes.push_back(static_cast<int>(i));
    const int n_samples = static_cast<int>(nodes.size());
    const int n_total = n_samples + 2;
    const QuatPair qs = to_quat_pair(start), qg = to_quat_pair(goal);

    auto node_quat = [&](int a) -> const QuatPair& {
        if (a < n_samples) return quats[nodes[a]];
        return a == n_samples ? qs : qg;
    };
    auto node_rot = [&](int a) -> std::pair<Rotation, Rotation> {
        if (a < n_samples) return samples[nodes[a]];
        return a == n_samples ? start : goal;
    };

    // Dijkstra over edges shorter than the linking radius.
    std::vector<double> dist(n_total, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n_total, -1);
    std::vector<char> done(n_total, 0);
    dist[n_samples] = 0.0;
    while (true) {
        int best = -1;
        for (int i = 0; i < n_total; ++i)
            if (!done[i] && (best < 0 || dist[i] < dist[best])) best = i;
        if (best < 0 || !std::isfinite(dist[best])) break;
        if (best == n_samples + 1) break;
        done[best] = 1;
        for (int i = 0; i < n_total; ++i) {
            if (done[i]) continue;
            const double d = quat_pair_distance(node_quat(best), node_quat(i));
            if (d <= radius && dist[best] + d < dist[i]) {
                dist[i] = dist[best] + d;
                prev[i] = best;
            }
        }
    }
    if (!std::isfinite(dist[n_samples + 1])) return {};

    std::vector<int> chain;
    for (int a = n_samples + 1; a >= 0; a = prev[a]) {
        chain.push_back(a);
        if (a == n_samples) break;
    }
    std::reverse(chain.begin(), chain.end());

    std::vector<std::pair<Rotation, Rotation>> way;
    way.reserve(chain.size());
    for (int a : chain) way.push_back(node_rot(a));

    // Greedy geodesic shortcutting: jump ahead whenever the direct geodesic
    // stays inside the sublevel at sampled points.
    auto segment_inside = [&](const std::pair<Rotation, Rotation>& a,
                              const std::pair<Rotation, Rotation>& b) {
        if (rotation_distance(a.first, b.first) >= M_PI - 1e-3 ||
            rotation_distance(a.second, b.second) >= M_PI - 1e-3)
            return false; // geodesic through the antipode is not defined
        const double d = orientation_distance(a, b);
        const int steps = std::max(4, static_cast<int>(std::ceil(d / 0.05)));
        for (int i = 1; i < steps; ++i) {
            const double s = static_cast<double>(i) / steps;
            if (F(geodesic_interpolate(a.first, b.first, s),
                  geodesic_interpolate(a.second, b.second, s)) >= -delta)
                return false;
        }
        return true;
    };
    std::vector<std::pair<Rotation, Rotation>> smooth;
    std::size_t i = 0;
    smooth.push_back(way.front());
    while (i + 1 < way.size()) {
        std::size_t j = way.size() - 1;
        while (j > i + 1 && !segment_inside(way[i], way[j])) --j;
        smooth.push_back(way[j]);
        i = j;
    }

    // Densify so that consecutive waypoints are close in the product metric.
    std::vector<std::pair<Rotation, Rotation>> dense;
    dense.push_back(smooth.front());
    for (std::size_t k = 1; k < smooth.size(); ++k) {
        const double d = orientation_distance(smooth[k - 1], smooth[k]);
        const int pieces = std::max(1, static_cast<int>(std::ceil(d / 0.2)));
        for (int p = 1; p <= pieces; ++p) {
            const double s = static_cast<double>(p) / pieces;
            dense.emplace_back(geodesic_interpolate(smooth[k - 1].first, smooth[k].first, s),
                               geodesic_interpolate(smooth[k - 1].second, smooth[k].second, s));
        }
    }
    return dense;
}

} // namespace

BoundedPathResult bounded_minmax_path(const EnergySurface& surface, const PathOnConfigSpace& path,
                                      double L_cut, std::uint64_t seed, int grid_n) {
    surface.validate();
    if (L_cut < surface.L_min)
        throw PreconditionError("bounded_minmax_path: L_cut below the surface's L_min");
    if (path.nodes.front().L >= L_cut || path.nodes.back().L >= L_cut)
        throw PreconditionError("bounded_minmax_path: path endpoints must lie below L_cut");

    const SurfaceFunction fn = make_surface_function(surface);

    BoundedPathResult result{path, 0.0, 0.0, L_cut, 0.0, 0.0, false, false, ""};
    result.input_max = path_max(fn, path, 16).level;

    double peak_L = 0.0;
    for (const auto& nd : path.nodes) peak_L = std::max(peak_L, nd.L);
    if (peak_L <= L_cut) {
        result.output_max = result.input_max;
        result.status = "already_bounded";
        return result;
    }

    const auto [t0, t1] = crossing_times(path, L_cut);
    const Configuration at0 = path.at(t0);
    const Configuration at1 = path.at(t1);
    const Configuration cfg0(L_cut, at0.U, at0.V);
    const Configuration cfg1(L_cut, at1.U, at1.V);

    const auto n1 = first_nonvanishing_order(surface.rho1);
    const auto n2 = first_nonvanishing_order(surface.rho2);

    auto orientation_energy = [&](const Rotation& u, const Rotation& v) {
        return fn(Configuration(L_cut, u, v));
    };

    std::vector<Configuration> out;
    const std::size_t S = path.segments();
    for (std::size_t k = 0; k < path.nodes.size(); ++k) {
        if (static_cast<double>(k) / S < t0 - 1e-12) out.push_back(path.nodes[k]);
        else break;
    }
    auto push_cfg = [&out](const Configuration& c) {
        if (out.empty() || product_distance(out.back(), c) > 1e-12) out.push_back(c);
    };
    push_cfg(cfg0);

    if (!n1 || !n2) {
        // All moments vanish: the interaction at L_cut reduces to the
        // attractive tail, so any rotation path works.
        result.vdw_dominated = true;
        result.status = "vdw_dominated";
        std::pair<Rotation, Rotation> cur{cfg0.U, cfg0.V};
        const auto legsU = safe_rotation_path(cfg0.U, cfg1.U);
        const auto legsV = safe_rotation_path(cfg0.V, cfg1.V);
        const std::size_t legs = std::max(legsU.size(), legsV.size());
        for (std::size_t leg = 0; leg < legs; ++leg) {
            const Rotation targetU = leg < legsU.size() ? legsU[leg] : legsU.back();
            const Rotation targetV = leg < legsV.size() ? legsV[leg] : legsV.back();
            const double d = std::max(rotation_distance(cur.first, targetU),
                                      rotation_distance(cur.second, targetV));
            const int pieces = std::max(1, static_cast<int>(std::ceil(d / 0.2)));
            for (int p = 1; p <= pieces; ++p) {
                const double s = static_cast<double>(p) / pieces;
                push_cfg(Configuration(L_cut, geodesic_interpolate(cur.first, targetU, s),
                                       geodesic_interpolate(cur.second, targetV, s)));
            }
            cur = {targetU, targetV};
        }
    } else {
        DescentOptions opts;
        opts.segment_guard = true;
        const DescentResult desc0 =
            descend_to_pseudo_minimum(orientation_energy, cfg0.U, cfg0.V, seed ^ 0x1, opts);
        const DescentResult desc1 =
            descend_to_pseudo_minimum(orientation_energy, cfg1.U, cfg1.V, seed ^ 0x2, opts);

        const OrientationFunction F = leading_term_function(surface.rho1, surface.rho2, *n1, *n2);
        const double F0 = F(desc0.U, desc0.V);
        const double F1 = F(desc1.U, desc1.V);
        if (F0 >= 0.0 || F1 >= 0.0) {
            result.output_max = result.input_max;
            result.status = "descent endpoint has non-negative leading term";
            return result;
        }

        result.delta_initial = 0.5 * std::min(std::abs(F0), std::abs(F1));

        const auto samples = sample_so3_pairs(grid_n, seed ^ 0x5eedULL);
        std::vector<QuatPair> quats(samples.size());
        std::vector<double> values(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            quats[i] = to_quat_pair(samples[i]);
            values[i] = F(samples[i].first, samples[i].second);
        }
        const double radius = 1.2 * connectivity_radius(quats);

        std::vector<std::pair<Rotation, Rotation>> link;
        double delta = result.delta_initial;
        for (int attempt = 0; attempt < 12 && link.empty(); ++attempt, delta *= 0.5) {
            link = sublevel_link(F, {desc0.U, desc0.V}, {desc1.U, desc1.V}, delta, samples, quats,
                                 values, radius);
            result.delta_used = delta;
        }
        if (link.empty()) {
            result.output_max = result.input_max;
            result.status = "splice failure: pseudo-minima in different sublevel components";
            return result;
        }

        for (const auto& [u, v] : desc0.waypoints) push_cfg(Configuration(L_cut, u, v));
        for (const auto& [u, v] : link) push_cfg(Configuration(L_cut, u, v));
        for (auto it = desc1.waypoints.rbegin(); it != desc1.waypoints.rend(); ++it)
            push_cfg(Configuration(L_cut, it->first, it->second));
        result.status = "ok";
    }

    push_cfg(cfg1);
    for (std::size_t k = 0; k < path.nodes.size(); ++k)
        if (static_cast<double>(k) / S > t1 + 1e-12) push_cfg(path.nodes[k]);

    result.path = PathOnConfigSpace(std::move(out));
    result.changed = true;
    result.output_max = path_max(fn, result.path, 16).level;
    if (result.status == "ok" &&
        result.output_max > std::max(surface.E_infinity, result.input_max) + 1e-9)
        result.status = "energy bound violated";
    return result;
}

} // namespace dispersia
