#pragma once

// Shared fixtures and oracles for the unit and acceptance suites.

#include <array>
#include <cmath>
#include <cstdio>
#include <queue>
#include <string>
#include <vector>

#include "dispersia/energy_model.hpp"
#include "dispersia/multipole.hpp"
#include "dispersia/pathopt.hpp"

namespace dispersia::testsupport {

// --- two-well toy landscape over (L, alpha) -------------------------------
//
// alpha is the angle between U e1 and e1; V enters nowhere. Two Gaussian
// wells at (4, 0.6) and (6, 2.5) separated by a ridge along alpha ~ 1.55
// whose height is smallest near L = 7 (quartic top in alpha keeps the
// saddle flat so a 200x200 grid resolves the level to well under 1e-3).

inline double toy_two_well_energy(double L, double alpha) {
    const double w1 = std::exp(-((L - 4.0) * (L - 4.0) + (alpha - 0.6) * (alpha - 0.6)) / 0.6);
    const double w2 = std::exp(-((L - 6.0) * (L - 6.0) + (alpha - 2.5) * (alpha - 2.5)) / 0.6);
    const double u = (alpha - 1.55) / 0.7;
    const double ridge_height = 0.5 + 0.35 * ((L - 7.0) / 2.5) * ((L - 7.0) / 2.5);
    return -w1 - w2 + ridge_height * std::exp(-u * u * u * u);
}

inline double alpha_of(const Rotation& U) {
    return std::acos(std::clamp(U.matrix()(0, 0), -1.0, 1.0));
}

inline SurfaceFunction toy_surface() {
    SurfaceFunction fn;
    fn.L_min = 2.5;
    fn.E_infinity = 0.0;
    fn.energy = [](const Configuration& tau) {
        return toy_two_well_energy(tau.L, alpha_of(tau.U));
    };
    return fn;
}

/// Coordinate descent to the exact (L, alpha) minimum near a starting guess.
inline std::pair<double, double> refine_well(double L, double alpha) {
    double step = 0.1;
    double value = toy_two_well_energy(L, alpha);
    while (step > 1e-13) {
        bool moved = false;
        for (const auto& [dl, da] : std::array<std::pair<double, double>, 4>{
                 {{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}}) {
            const double cand = toy_two_well_energy(L + dl, alpha + da);
            if (cand < value) {
                L += dl;
                alpha += da;
                value = cand;
                moved = true;
                break;
            }
        }
        if (!moved) step /= 2.0;
    }
    return {L, alpha};
}

inline Configuration toy_configuration(double L, double alpha) {
    return Configuration(L, exp_map(Generator::axis(2), alpha), Rotation::identity());
}

/// Bottleneck (min-max) level between two cells of a dense grid over
/// (L, alpha): Dijkstra where a path's cost is the largest node value met,
/// 8-neighbor connectivity.
inline double grid_minmax_level(int n, double L_lo, double L_hi, double a_lo, double a_hi,
                                std::pair<double, double> from, std::pair<double, double> to) {
    std::vector<double> value(static_cast<std::size_t>(n) * n);
    const double dL = (L_hi - L_lo) / (n - 1);
    const double da = (a_hi - a_lo) / (n - 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            value[i * n + j] = toy_two_well_energy(L_lo + i * dL, a_lo + j * da);

    auto cell = [&](std::pair<double, double> p) {
        const int i = static_cast<int>(std::lround((p.first - L_lo) / dL));
        const int j = static_cast<int>(std::lround((p.second - a_lo) / da));
        return i * n + j;
    };
    const int start = cell(from), goal = cell(to);

    std::vector<double> bottleneck(value.size(), 1e300);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    bottleneck[start] = value[start];
    queue.emplace(bottleneck[start], start);
    while (!queue.empty()) {
        const auto [b, idx] = queue.top();
        queue.pop();
        if (b > bottleneck[idx]) continue;
        if (idx == goal) return b;
        const int i = idx / n, j = idx % n;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const int ni = i + di, nj = j + dj;
                if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
                const int nidx = ni * n + nj;
                const double nb = std::max(b, value[nidx]);
                if (nb < bottleneck[nidx]) {
                    bottleneck[nidx] = nb;
                    queue.emplace(nb, nidx);
                }
            }
    }
    return bottleneck[goal];
}

/// Neutral density whose moments vanish through order 4: opposite charges
/// spread over two 14-point spherical quadrature shells (6 axis points at
/// weight 1/15, 8 cube-diagonal points at weight 3/40 -- exact for degree-5
/// sphere integrands, so every degree 1..4 harmonic moment integrates to
/// zero on each shell).
inline ChargeDensity momentless_density() {
    std::vector<Eigen::Vector3d> pts;
    std::vector<double> ws;
    auto add_shell = [&](double radius, double charge) {
        for (int axis = 0; axis < 3; ++axis)
            for (double s : {1.0, -1.0}) {
                Eigen::Vector3d p = Eigen::Vector3d::Zero();
                p(axis) = radius * s;
                pts.push_back(p);
                ws.push_back(charge / 15.0);
            }
        const double d = radius / std::sqrt(3.0);
        for (double sx : {1.0, -1.0})
            for (double sy : {1.0, -1.0})
                for (double sz : {1.0, -1.0}) {
                    pts.emplace_back(d * sx, d * sy, d * sz);
                    ws.push_back(charge * 3.0 / 40.0);
                }
    };
    add_shell(0.4, 1.0);
    add_shell(0.8, -1.0);
    return ChargeDensity(std::move(pts), std::move(ws), "two-shell");
}

// --- dipole-dipole surrogate -------------------------------------------------

inline EnergySurface dipole_surrogate(double c_vdw = 0.75, double L_min = 2.0) {
    EnergySurface surface{unit_moment_density(1), unit_moment_density(1)};
    surface.E_infinity = 0.0;
    surface.vdw = c_vdw;
    surface.orders = {{1, 1}};
    surface.L_min = L_min;
    return surface;
}

/// Path between two head-to-tail minima at L_min with an excursion to
/// peak_L, passing through a repulsive orientation mid-excursion so the
/// input max sits strictly inside the far section.
inline PathOnConfigSpace excursion_path(double L_min, double peak_L) {
    const Rotation id = Rotation::identity();
    const Rotation flip = exp_map(Generator::axis(2), M_PI * 0.999);
    std::vector<Configuration> nodes;
    nodes.emplace_back(L_min, id, id); // head-to-tail minimum (F = -2)
    nodes.emplace_back(0.3 * peak_L, id, id);
    nodes.emplace_back(0.6 * peak_L, id, geodesic_interpolate(id, flip, 0.5));
    nodes.emplace_back(peak_L, id, flip); // repulsive far apex (F near +2)
    nodes.emplace_back(0.6 * peak_L, exp_map(Generator::axis(1), 0.7), flip);
    nodes.emplace_back(0.3 * peak_L, exp_map(Generator::axis(2), 0.55 * M_PI), flip);
    // second near-head-to-tail endpoint: both moments close to -e1
    nodes.emplace_back(L_min, flip, flip);
    return PathOnConfigSpace(std::move(nodes));
}

} // namespace dispersia::testsupport
