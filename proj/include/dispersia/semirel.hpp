#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "dispersia/errors.hpp"
#include "dispersia/rng.hpp"

namespace dispersia {

/// Periodic grid stand-in for R^d (d = 1 or 3) carrying the cached momentum
/// magnitudes and the kinetic symbol sqrt(1+|p|^2)-1 per mode. Mode k on an
/// axis carries momentum 2 pi k_signed / (2 half_width).
class SpectralGrid {
public:
    static SpectralGrid make(int dim, int points_per_axis, double half_width);

    int dim() const { return dim_; }
    int n() const { return n_; }
    double half_width() const { return half_width_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return total_; }
    double cell_volume() const;

    /// Axis coordinate of grid index i: -half_width + i * spacing.
    double coordinate(int i) const { return -half_width_ + i * spacing_; }
    /// Signed momentum of axis mode k.
    double momentum(int k) const;
    /// Spatial point of a flattened index (unused axes are zero).
    Eigen::Vector3d point(std::size_t flat) const;

    const std::vector<double>& momentum_abs() const { return momentum_abs_; }
    const std::vector<double>& symbol() const { return symbol_; }

private:
    int dim_, n_;
    double half_width_, spacing_;
    std::size_t total_;
    std::vector<double> momentum_abs_;
    std::vector<double> symbol_;
};

using RealField = std::vector<double>;
using ComplexField = std::vector<std::complex<double>>;

/// Owns FFTW plans and buffers for one grid; one instance per thread.
class FftWorkspace {
public:
    explicit FftWorkspace(const SpectralGrid& grid);
    ~FftWorkspace();
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;

    /// Continuum-normalized transform: (2 pi)^{-d/2} integral e^{-ipx} psi.
    ComplexField transform(const ComplexField& psi);
    /// Multiply the spectrum by a per-mode factor and transform back.
    void apply_multiplier(const std::vector<double>& factor, const ComplexField& in,
                          ComplexField& out);

    const SpectralGrid& grid() const { return grid_; }

private:
    SpectralGrid grid_;
    void* plan_fwd_;
    void* plan_bwd_;
    std::complex<double>* buffer_;
};

/// (F^{-1} [ (sqrt(1+|p|^2)-1) F psi ]); exact on grid-resolved plane waves.
ComplexField apply_T(const SpectralGrid& grid, const ComplexField& psi);
RealField apply_T(const SpectralGrid& grid, const RealField& psi);
void apply_T(FftWorkspace& ws, const RealField& in, RealField& out);

/// Grid inner product cellvol * sum conj(f) g.
std::complex<double> inner(const SpectralGrid& grid, const ComplexField& f, const ComplexField& g);
double inner(const SpectralGrid& grid, const RealField& f, const RealField& g);

/// Off-diagonal Bessel-kernel quadratic form
///   -(1/2 pi^2) sum_x sum_y K_2(|x-y|)/|x-y|^2 f(x) g(y) cellvol^2
/// for real fields with supports at distance >= R >= 1 (3D only).
double kernel_form(const SpectralGrid& grid, const RealField& f, const RealField& g, double R);

/// Smallest distance between the supports of two fields.
double support_distance(const SpectralGrid& grid, const RealField& f, const RealField& g);

/// Radial plateau cutoff: exactly 1 for r <= scale/10, exactly 0 for
/// r >= scale/8, C-infinity exponential blend across the transition shell.
struct CutoffFunction {
    double scale;
    double operator()(double r) const;
};

/// Quadratic partition built from the cutoff profile: plateaus around the
/// origin and around the separation vector, remainder channel, all
/// normalized so the squares sum to one pointwise.
struct PartitionOfUnity {
    double scale;
    Eigen::Vector3d separation; ///< center of the second plateau, at scale 1

    /// J_i at spatial point x, i in {0,1,2}.
    double J(int i, const Eigen::Vector3d& x) const;
    /// The three fields sampled on the grid.
    std::array<RealField, 3> sample(const SpectralGrid& grid) const;

private:
    double v(int i, const Eigen::Vector3d& y) const;
};

struct CommutatorEstimate {
    double norm;      ///< power-iteration estimate of ||[T, zeta_R]||
    bool converged;   ///< false flags power-iteration stagnation
    double iterations;
};

/// Power iteration on [T,zeta]^* [T,zeta]; the transition shell must be
/// resolved by at least 8 grid points and the scale must exceed 1.
CommutatorEstimate commutator_norm(const SpectralGrid& grid, const CutoffFunction& zeta,
                                   int iterations = 50, std::uint64_t seed = 0);

/// The explicit Fourier-side bound (2 pi)^{-d/2} || |q| F(zeta_R) ||_1
/// evaluated on the grid; the commutator norm never exceeds it.
double commutator_fourier_bound(const SpectralGrid& grid, const CutoffFunction& zeta);

/// IMS localization error <psi,T psi> - sum_i <J_i psi, T J_i psi>.
double ims_error(const SpectralGrid& grid, const PartitionOfUnity& partition,
                 const RealField& psi);

struct EigenResult {
    std::vector<double> eigenvalues; ///< nondecreasing
    std::vector<RealField> eigenvectors;
    std::vector<double> residuals;
    int restarts;
};

/// Lowest-k eigenpairs of T + potential by thick-restart Lanczos with full
/// reorthogonalization; residual tolerance 1e-8.
EigenResult ground_state(const SpectralGrid& grid, const RealField& potential, int k,
                         std::uint64_t seed = 0, double tol = 1e-8, int max_restarts = 300);

struct DecayFit {
    bool applicable = false; ///< false when the state is not below the essential floor
    double rate = 0.0;       ///< fitted slope of log shell-average vs radius
    double r_squared = 0.0;
    bool certified = false;  ///< negative rate with r_squared >= 0.95
    std::vector<double> radii;
    std::vector<double> shell_log_average;
};

/// Exponential-decay certificate from the radial profile of |psi| beyond
/// threshold_radius (underflow shells truncated, box corners excluded).
DecayFit decay_rate(const SpectralGrid& grid, const RealField& psi, double threshold_radius,
                    double eigenvalue, double essential_floor);

struct ZhislinReport {
    std::vector<double> R_values;
    std::vector<double> values;    ///< <f_R, (T+V) f_R> per R
    std::vector<double> kinetic;
    std::vector<double> potential;
    double fit_c = 0.0;            ///< value approx -c/R + d/R^2
    double fit_d = 0.0;
    double floor = 0.0;
    double min_value = 0.0;
    double argmin_R = 0.0;
    bool dips_below_floor = false;
    double max_cross_term = 0.0;         ///< largest off-diagonal form entry
    std::vector<double> span_eigenvalues; ///< projected quadratic form on the trial span
    bool all_span_negative = false;
};

/// Scaled annulus-supported trial functions f_R(x) = R^{-3/2} f(x/R) with f
/// a smooth bump on {5/4 <= |x| <= 7/4}: Rayleigh quotients across R_values,
/// the -c/R + d/R^2 fit, and the projected form on the whole trial span.
ZhislinReport zhislin_trial_bound(const SpectralGrid& grid, const RealField& nuclear_potential,
                                  const std::vector<double>& R_values, double floor = 0.0);

/// Smoothed attractive Coulomb well -Z/sqrt(|x|^2 + a^2) sampled on the grid.
RealField smoothed_coulomb(const SpectralGrid& grid, double Z, double a,
                           const Eigen::Vector3d& center = Eigen::Vector3d::Zero());

/// C-infinity radial bump of given support radius centered at c, value 1 at
/// the center.
RealField radial_bump(const SpectralGrid& grid, const Eigen::Vector3d& center, double radius);

RealField gaussian_field(const SpectralGrid& grid, const Eigen::Vector3d& center, double sigma);

/// Gaussian clipped to zero outside the given radius. With the truncation
/// amplitude far below the working accuracy this is the disjoint-support
/// test function whose spectrum still dies before the grid Nyquist.
RealField truncated_gaussian(const SpectralGrid& grid, const Eigen::Vector3d& center,
                             double sigma, double radius);

} // namespace dispersia
