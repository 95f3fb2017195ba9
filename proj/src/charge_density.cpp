#include "dispersia/charge_density.hpp"

#include <cmath>

#include "dispersia/kahan.hpp"

namespace dispersia {

void ChargeDensity::validate() const {
    if (points.empty()) throw ValidationError("density '" + label + "': no points");
    if (points.size() != weights.size())
        throw ValidationError("density '" + label + "': points and weights differ in length");
    for (const auto& p : points)
        if (!p.allFinite()) throw ValidationError("density '" + label + "': non-finite coordinate");
    for (double w : weights)
        if (!std::isfinite(w)) throw ValidationError("density '" + label + "': non-finite weight");
}

double ChargeDensity::max_radius() const {
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, p.norm());
    return r;
}

double total_charge(const ChargeDensity& rho) {
    KahanSum sum;
    for (double w : rho.weights) sum.add(w);
    return sum.value();
}

ChargeDensity rotate_density(const Rotation& U, const ChargeDensity& rho) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(rho.size());
    for (const auto& p : rho.points) pts.push_back(U * p);
    return ChargeDensity(std::move(pts), rho.weights, rho.label);
}

ChargeDensity place_pair(const ChargeDensity& rho1, const ChargeDensity& rho2,
                         const Configuration& tau) {
    const Eigen::Vector3d shift(tau.L, 0.0, 0.0);
    std::vector<Eigen::Vector3d> pts;
    std::vector<double> ws;
    pts.reserve(rho1.size() + rho2.size());
    ws.reserve(rho1.size() + rho2.size());
    for (const auto& p : rho1.points) pts.push_back(tau.U * p);
    for (double w : rho1.weights) ws.push_back(w);
    for (const auto& p : rho2.points) pts.push_back(tau.V * p + shift);
    for (double w : rho2.weights) ws.push_back(w);
    return ChargeDensity(std::move(pts), std::move(ws), rho1.label + "+" + rho2.label);
}

} // namespace dispersia
