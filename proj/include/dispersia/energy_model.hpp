#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "dispersia/charge_density.hpp"
#include "dispersia/multipole.hpp"

namespace dispersia {

/// Finite-dimensional stand-in for a molecule at infinite separation: a
/// Hermitian Hamiltonian, the three dipole operators, and its ground-state
/// data. Ground spaces may be degenerate.
struct ToyMolecule {
    Eigen::MatrixXcd hamiltonian;
    std::array<Eigen::MatrixXcd, 3> dipole_ops;
    double ground_energy;
    Eigen::MatrixXcd ground_projector;

    /// Diagonalizes H and builds the ground projector from all eigenvalues
    /// within degeneracy_tol of the smallest.
    static ToyMolecule build(Eigen::MatrixXcd H, std::array<Eigen::MatrixXcd, 3> dipoles,
                             double degeneracy_tol = 1e-10);

    /// Isotropic charged oscillator truncated to {ground, one excitation per
    /// axis}: 4 levels, dipole matrix elements 1/sqrt(2 omega).
    static ToyMolecule drude(double omega);

    void validate() const;
    Eigen::Index dim() const { return hamiltonian.rows(); }
};

Eigen::MatrixXcd kronecker(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// Rotated dipole-dipole coupling on the product space:
///   f_(U,V) = sum_{i,j} (delta_ij - 3 delta_i1 delta_j1) (U D1)_i x (V D2)_j
/// with (U D)_i = sum_j U_ij D_j.
Eigen::MatrixXcd dipole_interaction_operator(const ToyMolecule& mol1, const ToyMolecule& mol2,
                                             const Rotation& U, const Rotation& V);

struct VdwResult {
    double c_max;           ///< largest eigenvalue of the resolvent quadratic form
    Eigen::VectorXcd phi;   ///< maximizing ground-space vector (product-space coords)
    double gap;             ///< min spec of the complement block minus E1+E2
};

/// Van der Waals coefficient: the resolvent quadratic form of the coupling
/// on the joint ground space, maximized over normalized ground vectors.
/// Requires a spectral gap above E1+E2 on the complement.
VdwResult vdw_coefficient(const ToyMolecule& mol1, const ToyMolecule& mol2,
                          const Rotation& U, const Rotation& V);

struct FeshbachResult {
    Eigen::MatrixXcd matrix; ///< effective operator on ran P in the basis below
    Eigen::MatrixXcd basis;  ///< orthonormal columns spanning ran P
};

/// F_P(E) = (P H P - P H Pperp (Hperp - E)^{-1} Pperp H P)|_{ran P}.
/// Requires Hperp - E comfortably invertible (smallest singular value
/// above 1e-10).
FeshbachResult feshbach_map(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& P, double E);

/// Solves E = min eig F_P(E) by bisection below min spec(Hperp); returns the
/// eigenvalue of H recovered through the projected fixed-point problem.
double ground_state_energy_fixed_point(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& P);

/// Asymptotic interaction energy surface: multipolar terms over a fixed
/// order set plus the attractive van der Waals tail.
struct EnergySurface {
    ChargeDensity rho1;
    ChargeDensity rho2;
    double E_infinity = 0.0;
    /// Either a fixed coefficient or a molecule pair whose coefficient is
    /// orientation-dependent.
    std::variant<double, std::pair<ToyMolecule, ToyMolecule>> vdw = 0.0;
    std::vector<std::pair<int, int>> orders; ///< (n,m) with 2 <= n+m <= 5
    double L_min = 1.0;

    void validate() const;
};

/// E_inf + sum F^(n,m)(U rho1, V rho2)/L^(n+m+1) - C_vdW(U,V)/L^6.
double surface_energy(const EnergySurface& surface, const Configuration& tau);

/// Evaluator interface the path machinery runs on. EnergySurface adapts to
/// it; test landscapes can provide any callable.
struct SurfaceFunction {
    std::function<double(const Configuration&)> energy;
    double L_min = 0.0;
    double E_infinity = 0.0;

    double operator()(const Configuration& tau) const { return energy(tau); }
};

SurfaceFunction make_surface_function(const EnergySurface& surface);

} // namespace dispersia
