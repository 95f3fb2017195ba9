#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dispersia/energy_model.hpp"

namespace dispersia {

/// Discretized continuous path [0,1] -> configuration space. Rotations are
/// interpolated along geodesics, L linearly; consecutive rotations must be
/// within angle pi of each other so the relative log is well defined.
struct PathOnConfigSpace {
    std::vector<Configuration> nodes;

    explicit PathOnConfigSpace(std::vector<Configuration> ns) : nodes(std::move(ns)) { validate(); }

    void validate() const;
    std::size_t segments() const { return nodes.size() - 1; }

    /// Point at global parameter t in [0,1] (uniform across segments).
    Configuration at(double t) const;

    /// Same path with each segment split into `factor` pieces (node
    /// insertion at interpolated positions).
    PathOnConfigSpace refined(int factor) const;
};

struct PathMaxResult {
    double level;
    double argmax_t;
};

/// Max of the surface over the sampled interpolated path, sharpened by
/// golden-section refinement around the best sample down to parameter
/// resolution 1e-4 (ties broken toward the first index).
PathMaxResult path_max(const SurfaceFunction& surface, const PathOnConfigSpace& path,
                       int samples_per_segment);

struct MinMaxResult {
    double level;
    double argmax_t;
    PathOnConfigSpace path;
    long iterations;
    bool converged;
};

/// String-of-nodes relaxation of the path max between two endpoint minima:
/// the max node and its neighbors move along generator/L directions that
/// lower the path max, with arclength reparametrization between sweeps.
/// Deterministic for fixed seed. Endpoints are checked to be local minima
/// (pseudo-minimum criterion at delta = 1e-6 plus an L-derivative sign
/// check; at the L_min boundary only outward growth is required).
MinMaxResult minmax_optimize(const SurfaceFunction& surface, const Configuration& tau0,
                             const Configuration& tau1, int nodes, std::uint64_t seed,
                             int samples_per_segment = 12, long move_cap = 100000);

using OrientationFunction = std::function<double(const Rotation&, const Rotation&)>;

struct DescentResult {
    Rotation U;
    Rotation V;
    std::vector<double> trace; ///< value at every accepted waypoint, nonincreasing
    std::vector<std::pair<Rotation, Rotation>> waypoints;
};

struct DescentOptions {
    int random_directions = 10;
    double initial_step = 1e-1;
    double step_floor = 1e-6;
    long move_cap = 20000;
    /// When set, a move is accepted only if sampled interior points of its
    /// geodesic segment stay at or below the segment start value, so the
    /// waypoint polyline itself never exceeds the starting value.
    bool segment_guard = false;
};

/// Monotone descent over orientation space: scan the 6 basis directions plus
/// seeded random generator pairs over a decreasing step ladder, move along
/// the best strictly decreasing geodesic step, stop when none decreases.
DescentResult descend_to_pseudo_minimum(const OrientationFunction& f, const Rotation& U0,
                                        const Rotation& V0, std::uint64_t seed,
                                        const DescentOptions& opts = {});

struct PseudoMinReport {
    Eigen::Matrix3d U;
    Eigen::Matrix3d V;
    double first_derivative_max;
    double second_derivative_min;
    double F_value;
    double delta;
    int generator_sample_size; ///< finite stand-in for "all A,B" (see header note)
    bool pass;
};

/// Numerical certificate of the delta-form pseudo-minimum criterion over the
/// generator sample (6 basis pairs plus fixed seeded combinations):
/// max |d/dt F| <= delta and min d^2/dt^2 F >= -delta.
PseudoMinReport pseudo_min_criterion(const OrientationFunction& f, const Rotation& U,
                                     const Rotation& V, double delta);

struct NegativityReport {
    int n = 0, m = 0;
    double delta = 0.0;
    int trials = 0;
    std::vector<double> endpoint_values;
    double min_endpoint = 0.0;
    double max_endpoint = 0.0;
    bool pass = false;
};

/// Runs seeded descents on F^(n,m) and checks that every endpoint value sits
/// at or below -delta. n+m must lie in {2,3,4}; when an octopole moment
/// leads, its contraction map must be non-degenerate.
NegativityReport negativity_at_pseudomin(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                         int n, int m, double delta, int trials,
                                         std::uint64_t seed);

/// Same on the built-in unit-moment fixtures for the given orders.
NegativityReport negativity_at_pseudomin(int n, int m, double delta, int trials,
                                         std::uint64_t seed);

struct ConnectivityReport {
    int n = 0, m = 0;
    double delta = 0.0;
    int samples = 0;
    int sublevel_count = 0;
    int components = 0;
    double radius = 0.0; ///< linking radius derived from the sample's own connectivity scale
    bool nonempty = false;
    bool pass = false;
};

/// Samples Haar pairs, keeps those with F^(n,m) < -delta, links samples
/// within the radius at which the full uniform sample is single-component
/// (times a 1.2 covering margin), and counts components of the sublevel
/// graph.
ConnectivityReport sublevel_connectivity(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                         int n, int m, double delta, int grid_n,
                                         std::uint64_t seed);

ConnectivityReport sublevel_connectivity(int n, int m, double delta, int grid_n,
                                         std::uint64_t seed);

struct BoundedPathResult {
    PathOnConfigSpace path;
    double input_max = 0.0;
    double output_max = 0.0;
    double L_cut = 0.0;
    double delta_used = 0.0;   ///< sublevel depth the splice ran at (0 if unused)
    double delta_initial = 0.0;
    bool changed = false;
    bool vdw_dominated = false;
    std::string status; ///< "ok", "already_bounded", "vdw_dominated", or a failure reason
};

/// The bounded min-max construction: truncate the path's excursion beyond
/// L_cut, descend both crossing orientations to pseudo-minima at fixed
/// L_cut, connect them inside the negative sublevel of the leading
/// multipolar term, and splice. Falls back to halving the sublevel depth
/// when the pseudo-minima land in different sampled components; reports a
/// splice failure if that never succeeds.
BoundedPathResult bounded_minmax_path(const EnergySurface& surface, const PathOnConfigSpace& path,
                                      double L_cut, std::uint64_t seed = 0, int grid_n = 4096);

/// Smallest separation at which the leading term at depth delta dominates
/// twice a crude moment-magnitude bound on the next-order terms.
double choose_L_cut(const EnergySurface& surface, double delta);

} // namespace dispersia
