#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dispersia/errors.hpp"
#include "dispersia/rotations.hpp"

namespace dispersia {

/// Rigid molecular charge distribution as a finite signed point measure:
/// nuclei plus a quadrature-sampled electron cloud, in atomic units.
/// Immutable after construction; all operations on it are pure.
struct ChargeDensity {
    std::vector<Eigen::Vector3d> points;
    std::vector<double> weights;
    std::string label;

    ChargeDensity(std::vector<Eigen::Vector3d> pts, std::vector<double> ws, std::string lbl = "")
        : points(std::move(pts)), weights(std::move(ws)), label(std::move(lbl)) {
        validate();
    }

    void validate() const;
    std::size_t size() const { return points.size(); }

    /// Largest distance of a support point from the origin (the body frame
    /// center); rotation-invariant.
    double max_radius() const;
};

/// Relative placement of the two rigid molecules: separation L > 0 along
/// e1 = (1,0,0), orientations U (molecule 1) and V (molecule 2).
struct Configuration {
    double L;
    Rotation U;
    Rotation V;

    Configuration(double l, Rotation u, Rotation v) : L(l), U(std::move(u)), V(std::move(v)) {
        if (!(L > 0.0)) throw DomainError("Configuration: separation L must be positive");
    }
};

/// Sum of weights in index order with compensated summation.
double total_charge(const ChargeDensity& rho);

/// Pushforward of the measure: every point x goes to Ux, weights unchanged.
ChargeDensity rotate_density(const Rotation& U, const ChargeDensity& rho);

/// Union of U rho1 and V rho2 + L e1, i.e. the placed two-molecule cloud.
ChargeDensity place_pair(const ChargeDensity& rho1, const ChargeDensity& rho2,
                         const Configuration& tau);

} // namespace dispersia
