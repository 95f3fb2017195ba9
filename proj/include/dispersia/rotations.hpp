#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "dispersia/errors.hpp"
#include "dispersia/rng.hpp"

namespace dispersia {

/// Element of SO(3), stored as a matrix. Construction validates
/// orthonormality (max-norm of R^T R - I <= 1e-10) and det R = 1 +- 1e-10.
class Rotation {
public:
    explicit Rotation(const Eigen::Matrix3d& m) : m_(m) { validate(m_); }

    static Rotation identity() { return Rotation(Eigen::Matrix3d::Identity()); }

    const Eigen::Matrix3d& matrix() const { return m_; }

    Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }
    Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
    Rotation inverse() const { return Rotation(Eigen::Matrix3d(m_.transpose())); }

    static void validate(const Eigen::Matrix3d& m);

private:
    Eigen::Matrix3d m_;
};

/// Element of the bounded generator set: antisymmetric with |entries| <= 1.
/// Antisymmetry must hold exactly (the set is defined by matrix identities,
/// not tolerances).
class Generator {
public:
    explicit Generator(const Eigen::Matrix3d& m) : m_(m) { validate(m_); }

    /// Zero generator (fixed slot in mixed (A,B) directions).
    static Generator zero() { return Generator(Eigen::Matrix3d::Zero()); }

    /// Unit-rate generator of rotations about axis e_i, entries in {-1,0,1}.
    static Generator axis(int i);

    /// Generator with axis vector w (so exp rotates about w/|w| at rate |w|).
    /// Requires |w_i| <= 1 componentwise.
    static Generator from_axis_vector(const Eigen::Vector3d& w);

    const Eigen::Matrix3d& matrix() const { return m_; }
    Eigen::Vector3d axis_vector() const { return Eigen::Vector3d(m_(2, 1), m_(0, 2), m_(1, 0)); }
    bool is_zero() const { return m_.isZero(0.0); }

    static void validate(const Eigen::Matrix3d& m);

private:
    Eigen::Matrix3d m_;
};

/// Direction in the product tangent space; the zero() generator gives the
/// single-factor directions.
struct GeneratorPair {
    Generator A;
    Generator B;
};

/// Rodrigues closed form for exp(tA). exp_map(A, 0) is the identity exactly.
Rotation exp_map(const Generator& A, double t);

/// exp of an arbitrary antisymmetric matrix (no entry bound), used for
/// geodesic interpolation where relative logs exceed the generator box.
Eigen::Matrix3d rodrigues(const Eigen::Matrix3d& skew);

/// Principal matrix logarithm of R in so(3). Requires rotation angle < pi
/// (throws DomainError at angle pi where the log branch is ambiguous).
Eigen::Matrix3d so3_log(const Eigen::Matrix3d& R);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_distance(const Rotation& a, const Rotation& b);

/// Point at parameter s in [0,1] on the geodesic from a to b.
Rotation geodesic_interpolate(const Rotation& a, const Rotation& b, double s);

/// The 6 basis directions of the product tangent space: the three axis
/// generators paired with zero in the V slot, and vice versa.
std::vector<GeneratorPair> generator_basis();

/// k seeded pairs with both slots drawn from the generator box (random
/// combinations supplementing the basis in "for all A,B" checks).
std::vector<GeneratorPair> random_generator_pairs(int k, SplitRng rng);

/// Quasi-uniform Haar samples via normalized random quaternions.
/// Deterministic for a fixed seed.
std::vector<std::pair<Rotation, Rotation>> sample_so3_pairs(int n, std::uint64_t seed);

Eigen::Matrix3d quaternion_to_matrix(double w, double x, double y, double z);
Eigen::Vector4d matrix_to_quaternion(const Eigen::Matrix3d& m);

struct DerivativeEstimate {
    double value;
    double error; ///< Richardson level difference, an a-posteriori estimate.
};

/// d^k/dt^k f(exp(tA) U, exp(tB) V) at t = 0, by central differences on a
/// three-level Richardson tableau (steps h, h/2, h/4). The error estimate is
/// the difference between the last two extrapolation stages. k in {1,2}.
template <typename F>
DerivativeEstimate directional_derivative(F&& f, const Rotation& U, const Rotation& V,
                                          const GeneratorPair& dir, int order,
                                          double h = 1e-3) {
    if (order != 1 && order != 2) throw DomainError("directional_derivative: order must be 1 or 2");
    auto g = [&](double t) {
        const Rotation Ut = exp_map(dir.A, t) * U;
        const Rotation Vt = exp_map(dir.B, t) * V;
        const double val = f(Ut, Vt);
        if (!std::isfinite(val)) throw DomainError("directional_derivative: non-finite function value");
        return val;
    };
    const double g0 = (order == 2) ? g(0.0) : 0.0;
    auto stencil = [&](double s) {
        if (order == 1) return (g(s) - g(-s)) / (2.0 * s);
        return (g(s) - 2.0 * g0 + g(-s)) / (s * s);
    };
    double d[3] = {stencil(h), stencil(h / 2.0), stencil(h / 4.0)};
    double first_stage = 0.0;
    for (int m = 1; m < 3; ++m) {
        const double w = std::pow(4.0, m);
        for (int i = 2; i >= m; --i) d[i] = (w * d[i] - d[i - 1]) / (w - 1.0);
        if (m == 1) first_stage = d[2];
    }
    return {d[2], std::abs(d[2] - first_stage)};
}

} // namespace dispersia
