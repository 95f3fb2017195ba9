#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "dispersia/charge_density.hpp"

namespace dispersia {

/// Sorted multi-index (i1 <= ... <= in, i in {1,2,3}) identifying one
/// independent entry of a symmetric tensor.
using MultiIndex = std::vector<int>;

MultiIndex sorted_index(MultiIndex idx);

/// All sorted multi-indices of a given order, lexicographically.
std::vector<MultiIndex> sorted_indices(int order);

/// Fully symmetric order-n tensor stored by sorted multi-index.
class SymmetricTensor {
public:
    SymmetricTensor(int order, std::map<MultiIndex, double> entries);

    int order() const { return order_; }
    /// Entry for an arbitrary (unsorted) multi-index.
    double entry(const MultiIndex& idx) const;
    const std::map<MultiIndex, double>& entries() const { return entries_; }
    double max_abs() const;

    /// Full contraction with order() many vectors.
    double contract(const std::vector<Eigen::Vector3d>& hs) const;

private:
    int order_;
    std::map<MultiIndex, double> entries_;
};

using MultipoleTensor = SymmetricTensor;
using CoulombDerivativeTensor = SymmetricTensor;

/// Exact partial derivative d_{i1}...d_{in} (1/|x|) as a sum of terms
/// c * x^a / |x|^k, built by the homogeneous-rational recursion. Evaluation
/// multiplied by |x|^p is polynomial whenever p >= max k (no singularity).
class InverseNormDerivative {
public:
    static const InverseNormDerivative& get(const MultiIndex& sorted_idx);

    /// Value at x (requires |x| > 0).
    double evaluate(const Eigen::Vector3d& x) const;

    /// |x|^norm_power * value at x; exact polynomial evaluation valid at any
    /// x != 0, and finite for all x when norm_power >= largest |x|-power.
    double evaluate_scaled(const Eigen::Vector3d& x, int norm_power) const;

private:
    struct Term {
        double coeff;
        std::array<int, 3> pow;
        int inv_norm_pow; // power k of 1/|x|
    };
    std::vector<Term> terms_;

    InverseNormDerivative() = default;
    InverseNormDerivative differentiate(int axis) const;
    void combine();
};

/// 2^n-pole moment of a signed point measure in the |x|^(2n+1)-weighted
/// directional-derivative normalization. Orders 0..4.
MultipoleTensor multipole_moment(const ChargeDensity& rho, int order);

/// Partial derivatives of 1/|x| at x = e1, orders 0..8.
CoulombDerivativeTensor coulomb_derivatives(int order);

/// K_{m,n} = (-1)^m / (prod_{i<=m}(2i-1) prod_{j<=n}(2j-1)); empty products 1.
double interaction_prefactor(int n, int m);

/// Multipolar interaction coefficient F^(n,m)(rho1, rho2): the coefficient
/// of 1/L^(n+m+1) coupling the 2^n-pole of molecule 1 to the 2^m-pole of
/// molecule 2 across the e1 axis. Requires n+m <= 5.
double interaction_coefficient(int n, int m, const ChargeDensity& rho1,
                               const ChargeDensity& rho2);

/// Smallest order n in {1..4} whose moment tensor has max-norm above
/// tol * (max point radius)^n; nullopt if all vanish up to 4. The density
/// must be neutral within tol (relative to the total absolute weight).
std::optional<int> first_nonvanishing_order(const ChargeDensity& rho, double tol = 1e-9);

/// Point-measure fixture whose first non-vanishing moment has the given
/// order with max-norm entry exactly 1: a two-point dipole (order 1), a
/// four-point linear quadrupole (order 2), or an alternating-corner cube
/// octopole (order 3).
ChargeDensity unit_moment_density(int order);

/// Planar alternating hexagon: octopolar (orders 1,2 vanish) but with a
/// degenerate contraction map, violating the octopole non-degeneracy
/// hypothesis. Test/fixture density.
ChargeDensity degenerate_octopole_density();

/// Smallest singular value of v -> M(v,.,.) for an order-3 tensor, the
/// quantity whose positivity expresses octopole non-degeneracy.
double octopole_contraction_min_singular_value(const MultipoleTensor& m3);

} // namespace dispersia
