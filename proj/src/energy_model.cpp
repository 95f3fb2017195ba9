#include "dispersia/energy_model.hpp"

#include <cmath>
#include <limits>

#include "dispersia/kahan.hpp"

namespace dispersia {

namespace {

void require_hermitian(const Eigen::MatrixXcd& m, const char* what) {
    if (m.rows() != m.cols()) throw ValidationError(std::string(what) + ": matrix not square");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw ValidationError(std::string(what) + ": matrix not Hermitian");
}

/// Orthonormal bases of ran P and its complement from a Hermitian projector.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> split_projector(const Eigen::MatrixXcd& P) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(P);
    const auto& vals = es.eigenvalues();
    std::vector<Eigen::Index> inside, outside;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) > 0.5) inside.push_back(i);
        else outside.push_back(i);
        if (vals(i) > 1e-8 && vals(i) < 1.0 - 1e-8)
            throw ValidationError("projector has an eigenvalue away from {0,1}");
    }
    Eigen::MatrixXcd in(P.rows(), inside.size()), out(P.rows(), outside.size());
    for (std::size_t c = 0; c < inside.size(); ++c) in.col(c) = es.eigenvectors().col(inside[c]);
    for (std::size_t c = 0; c < outside.size(); ++c) out.col(c) = es.eigenvectors().col(outside[c]);
    return {in, out};
}

} // namespace

ToyMolecule ToyMolecule::build(Eigen::MatrixXcd H, std::array<Eigen::MatrixXcd, 3> dipoles,
                               double degeneracy_tol) {
    require_hermitian(H, "ToyMolecule H");
    for (const auto& d : dipoles) require_hermitian(d, "ToyMolecule dipole");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const double e0 = es.eigenvalues()(0);
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(H.rows(), H.cols());
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) <= e0 + degeneracy_tol)
            proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    ToyMolecule mol{std::move(H), std::move(dipoles), e0, std::move(proj)};
    mol.validate();
    return mol;
}

ToyMolecule ToyMolecule::drude(double omega) {
    // Basis {|0>, |x>, |y>, |z>}; positions couple ground to one-excitation
    // states with element 1/sqrt(2 omega).
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(4, 4);
    for (int i = 1; i < 4; ++i) H(i, i) = omega;
    const double g = 1.0 / std::sqrt(2.0 * omega);
    std::array<Eigen::MatrixXcd, 3> dipoles;
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
        d(0, axis + 1) = g;
        d(axis + 1, 0) = g;
        dipoles[axis] = d;
    }
    return build(std::move(H), std::move(dipoles));
}

void ToyMolecule::validate() const {
    require_hermitian(hamiltonian, "ToyMolecule H");
    for (const auto& d : dipole_ops) {
        require_hermitian(d, "ToyMolecule dipole");
        if (d.rows() != hamiltonian.rows())
            throw ValidationError("ToyMolecule: dipole dimension mismatch");
    }
    require_hermitian(ground_projector, "ToyMolecule projector");
    const double scale = std::max(1.0, ground_projector.cwiseAbs().maxCoeff());
    if ((ground_projector * ground_projector - ground_projector).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ValidationError("ToyMolecule: ground projector not idempotent");
    if ((hamiltonian * ground_projector - ground_projector * hamiltonian).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, hamiltonian.cwiseAbs().maxCoeff()))
        throw ValidationError("ToyMolecule: projector does not commute with H");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hamiltonian);
    if (std::abs(es.eigenvalues()(0) - ground_energy) > 1e-10 * std::max(1.0, std::abs(ground_energy)))
        throw ValidationError("ToyMolecule: stored ground energy is not the smallest eigenvalue");
}

Eigen::MatrixXcd kronecker(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXcd dipole_interaction_operator(const ToyMolecule& mol1, const ToyMolecule& mol2,
                                             const Rotation& U, const Rotation& V) {
    const Eigen::Index d1 = mol1.dim(), d2 = mol2.dim();
    // (U D)_i = sum_j U_ij D_j
    std::array<Eigen::MatrixXcd, 3> ud, vd;
    for (int i = 0; i < 3; ++i) {
        ud[i] = Eigen::MatrixXcd::Zero(d1, d1);
        vd[i] = Eigen::MatrixXcd::Zero(d2, d2);
        for (int j = 0; j < 3; ++j) {
            ud[i] += U.matrix()(i, j) * mol1.dipole_ops[j];
            vd[i] += V.matrix()(i, j) * mol2.dipole_ops[j];
        }
    }
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(d1 * d2, d1 * d2);
    for (int i = 0; i < 3; ++i) {
        const double weight = (i == 0) ? -2.0 : 1.0; // delta_ii - 3 delta_i1
        f += weight * kronecker(ud[i], vd[i]);
    }
    return f;
}

VdwResult vdw_coefficient(const ToyMolecule& mol1, const ToyMolecule& mol2,
                          const Rotation& U, const Rotation& V) {
    const Eigen::Index d1 = mol1.dim(), d2 = mol2.dim();
    const Eigen::MatrixXcd id1 = Eigen::MatrixXcd::Identity(d1, d1);
    const Eigen::MatrixXcd id2 = Eigen::MatrixXcd::Identity(d2, d2);
    const Eigen::MatrixXcd h_inf =
        kronecker(mol1.hamiltonian, id2) + kronecker(id1, mol2.hamiltonian);
    const Eigen::MatrixXcd proj = kronecker(mol1.ground_projector, mol2.ground_projector);
    const double e_sum = mol1.ground_energy + mol2.ground_energy;

    const auto [ground_basis, perp_basis] = split_projector(proj);
    if (ground_basis.cols() == 0) throw ValidationError("vdw_coefficient: empty ground space");
    if (perp_basis.cols() == 0)
        throw ConditioningError(
            "vdw_coefficient: ground space exhausts the product space, no gap exists");

    const Eigen::MatrixXcd h_perp =
        perp_basis.adjoint() * h_inf * perp_basis; // complement block of H_inf
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> perp_es(h_perp);
    const double gap = perp_es.eigenvalues()(0) - e_sum;
    if (gap <= 1e-10)
        throw ConditioningError("vdw_coefficient: no spectral gap above the ground energy sum");

    const Eigen::MatrixXcd f = dipole_interaction_operator(mol1, mol2, U, V);
    const Eigen::MatrixXcd coupling = perp_basis.adjoint() * f * ground_basis; // Pperp f per ground vector
    // Solve (Hperp - E1 - E2) X = coupling column by column via the
    // eigendecomposition of the complement block.
    const Eigen::MatrixXcd in_eigbasis = perp_es.eigenvectors().adjoint() * coupling;
    Eigen::MatrixXcd solved = in_eigbasis;
    for (Eigen::Index r = 0; r < solved.rows(); ++r)
        solved.row(r) /= (perp_es.eigenvalues()(r) - e_sum);

    // Quadratic form on the ground space: M_ab = <y_a, (Hperp-E)^{-1} y_b>.
    const Eigen::MatrixXcd quad = in_eigbasis.adjoint() * solved;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> quad_es(quad);
    const Eigen::Index top = quad_es.eigenvalues().size() - 1;
    VdwResult result;
    result.c_max = quad_es.eigenvalues()(top);
    result.phi = ground_basis * quad_es.eigenvectors().col(top);
    result.gap = gap;
    return result;
}

FeshbachResult feshbach_map(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& P, double E) {
    require_hermitian(H, "feshbach_map H");
    require_hermitian(P, "feshbach_map P");
    const auto [in, out] = split_projector(P);
    if (in.cols() == 0) throw ValidationError("feshbach_map: projector has empty range");
    const Eigen::MatrixXcd h_pp = in.adjoint() * H * in;
    if (out.cols() == 0) return {h_pp, in};
    const Eigen::MatrixXcd h_pq = in.adjoint() * H * out;
    Eigen::MatrixXcd shifted = out.adjoint() * H * out;
    shifted.diagonal().array() -= E;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().tail(1)(0) <= 1e-10)
        throw ConditioningError("feshbach_map: Hperp - E is near-singular");
    const Eigen::MatrixXcd resolvent_applied = svd.solve(h_pq.adjoint());
    return {h_pp - h_pq * resolvent_applied, in};
}

double ground_state_energy_fixed_point(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& P) {
    require_hermitian(H, "fixed_point H");
    const auto [in, out] = split_projector(P);
    if (in.cols() == 0) throw ValidationError("fixed_point: projector has empty range");

    double perp_floor;
    if (out.cols() == 0) {
        perp_floor = std::numeric_limits<double>::infinity();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(out.adjoint() * H * out));
        perp_floor = es.eigenvalues()(0);
    }

    auto gap_excess = [&](double E) { // min eig F_P(E) - E, decreasing in E
        const FeshbachResult f = feshbach_map(H, P, E);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(f.matrix);
        return es.eigenvalues()(0) - E;
    };

    const double norm_bound = H.cwiseAbs().rowwise().sum().maxCoeff(); // spectral radius bound
    double hi = std::min(perp_floor - 1e-8, norm_bound + 1.0);
    double lo = -norm_bound - 1.0;
    if (!(lo < hi)) throw BracketError("fixed_point: admissible interval is empty");
    if (gap_excess(hi) > 0.0)
        throw BracketError("fixed_point: no fixed point below the complement spectrum");
    if (gap_excess(lo) < 0.0)
        throw BracketError("fixed_point: function negative at the lower bracket end");

    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (gap_excess(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

void EnergySurface::validate() const {
    rho1.validate();
    rho2.validate();
    if (!(L_min > 0.0)) throw ValidationError("EnergySurface: L_min must be positive");
    for (const auto& [n, m] : orders)
        if (n < 0 || m < 0 || n + m < 2 || n + m > 5)
            throw ValidationError("EnergySurface: orders must satisfy 2 <= n+m <= 5");
}

double surface_energy(const EnergySurface& surface, const Configuration& tau) {
    if (tau.L < surface.L_min)
        throw DomainError("surface_energy: L below the surface's L_min");
    const ChargeDensity rot1 = rotate_density(tau.U, surface.rho1);
    const ChargeDensity rot2 = rotate_density(tau.V, surface.rho2);
    KahanSum sum;
    sum.add(surface.E_infinity);
    for (const auto& [n, m] : surface.orders)
        sum.add(interaction_coefficient(n, m, rot1, rot2) / std::pow(tau.L, n + m + 1));
    double c_vdw;
    if (std::holds_alternative<double>(surface.vdw)) {
        c_vdw = std::get<double>(surface.vdw);
    } else {
        const auto& [mol1, mol2] = std::get<std::pair<ToyMolecule, ToyMolecule>>(surface.vdw);
        c_vdw = vdw_coefficient(mol1, mol2, tau.U, tau.V).c_max;
    }
    sum.add(-c_vdw / std::pow(tau.L, 6));
    return sum.value();
}

SurfaceFunction make_surface_function(const EnergySurface& surface) {
    SurfaceFunction fn;
    fn.L_min = surface.L_min;
    fn.E_infinity = surface.E_infinity;
    fn.energy = [surface](const Configuration& tau) { return surface_energy(surface, tau); };
    return fn;
}

} // namespace dispersia
