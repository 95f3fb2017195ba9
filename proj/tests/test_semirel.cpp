#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "dispersia/rng.hpp"
#include "dispersia/kahan.hpp"
#include "dispersia/semirel.hpp"

using namespace dispersia;
using Eigen::Vector3d;

namespace {

ComplexField plane_wave(const SpectralGrid& grid, int kx, int ky, int kz) {
    ComplexField psi(grid.size());
    const double px = grid.momentum((kx % grid.n() + grid.n()) % grid.n());
    const double py = grid.momentum((ky % grid.n() + grid.n()) % grid.n());
    const double pz = grid.momentum((kz % grid.n() + grid.n()) % grid.n());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector3d x = grid.point(i);
        const double phase = px * x(0) + py * x(1) + pz * x(2);
        psi[i] = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return psi;
}

RealField random_field(const SpectralGrid& grid, std::uint64_t seed) {
    SplitRng rng(seed);
    RealField f(grid.size());
    for (auto& x : f) x = rng.normal();
    return f;
}

} // namespace

TEST_CASE("apply_T on plane waves reproduces the symbol") {
    const SpectralGrid grid = SpectralGrid::make(3, 16, 8.0);
    for (const auto& [kx, ky, kz] : std::vector<std::array<int, 3>>{
             {0, 0, 0}, {1, 0, 0}, {2, 3, 1}, {-1, 4, -2}}) {
        const ComplexField psi = plane_wave(grid, kx, ky, kz);
        const ComplexField tpsi = apply_T(grid, psi);
        const double px = grid.momentum((kx + grid.n()) % grid.n());
        const double py = grid.momentum((ky + grid.n()) % grid.n());
        const double pz = grid.momentum((kz + grid.n()) % grid.n());
        const double eig = std::sqrt(1.0 + px * px + py * py + pz * pz) - 1.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst, std::abs(tpsi[i] - eig * psi[i]));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("constant functions are annihilated and forms are nonnegative") {
    const SpectralGrid grid = SpectralGrid::make(1, 256, 20.0);
    ComplexField ones(grid.size(), 1.0);
    const ComplexField t_ones = apply_T(grid, ones);
    for (const auto& v : t_ones) CHECK(std::abs(v) < 1e-13);

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const RealField psi = random_field(grid, seed);
        CHECK(inner(grid, psi, apply_T(grid, psi)) >= -1e-10);
    }
}

TEST_CASE("Parseval holds for the continuum-normalized transform") {
    const SpectralGrid grid = SpectralGrid::make(1, 512, 30.0);
    FftWorkspace ws(grid);
    for (std::uint64_t seed : {5ull, 6ull}) {
        const RealField re = random_field(grid, seed);
        ComplexField psi(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = re[i];
        const ComplexField spec = ws.transform(psi);
        double norm_x = 0.0, norm_p = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) norm_x += std::norm(psi[i]);
        for (std::size_t i = 0; i < grid.size(); ++i) norm_p += std::norm(spec[i]);
        norm_x *= grid.cell_volume();
        norm_p *= std::pow(M_PI / grid.half_width(), grid.dim());
        CHECK(norm_p == doctest::Approx(norm_x).epsilon(1e-12));
    }
}

TEST_CASE("the one-sided symbol bound sqrt(1+q)-1 <= q/2 holds on all modes") {
    const SpectralGrid grid = SpectralGrid::make(3, 16, 6.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = grid.momentum_abs()[i];
        CHECK(grid.symbol()[i] <= 0.5 * p * p + 1e-15);
    }
}

TEST_CASE("kernel form matches the Fourier-side quadratic form on disjoint bumps") {
    // Truncated Gaussians: spectra die before the grid Nyquist and the box
    // keeps the periodic image a factor e^{-5} beyond the direct coupling.
    const SpectralGrid grid = SpectralGrid::make(3, 64, 26.0);
    const double sigma = 1.56, r0 = 9.17, c = 2.5 + r0;
    const RealField f = truncated_gaussian(grid, Vector3d(-c, 0, 0), sigma, r0);
    const RealField g = truncated_gaussian(grid, Vector3d(c, 0, 0), sigma, r0);
    CHECK(support_distance(grid, f, g) >= 5.0);
    const double kernel = kernel_form(grid, f, g, 5.0);
    const double fourier = inner(grid, f, apply_T(grid, g));
    CHECK(std::abs(kernel - fourier) <= 0.01 * std::abs(fourier));
    CHECK(kernel < 0.0); // attractive off-diagonal kernel for positive bumps

    const RealField zero(grid.size(), 0.0);
    CHECK(kernel_form(grid, f, zero, 5.0) == 0.0);
}

TEST_CASE("kernel form preconditions") {
    const SpectralGrid grid = SpectralGrid::make(3, 32, 10.0);
    const RealField f = radial_bump(grid, Vector3d(-2.0, 0, 0), 1.5);
    const RealField g = radial_bump(grid, Vector3d(2.0, 0, 0), 1.5);
    CHECK_THROWS_AS(kernel_form(grid, f, g, 5.0), PreconditionError);
    const SpectralGrid line = SpectralGrid::make(1, 64, 10.0);
    CHECK_THROWS_AS(kernel_form(line, RealField(64, 0.0), RealField(64, 0.0), 2.0), DomainError);
}

TEST_CASE("off-diagonal form decays exponentially in the separation") {
    const SpectralGrid grid = SpectralGrid::make(3, 64, 15.0);
    const double sigma = 0.75, r0 = 4.25;
    std::vector<double> log_vals, seps;
    for (double R : {4.0, 6.0, 8.0, 10.0}) {
        const double c = R / 2.0 + r0;
        const RealField f = truncated_gaussian(grid, Vector3d(-c, 0, 0), sigma, r0);
        const RealField g = truncated_gaussian(grid, Vector3d(c, 0, 0), sigma, r0);
        const double form = kernel_form(grid, f, g, R);
        log_vals.push_back(std::log(std::abs(form)));
        seps.push_back(R);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < seps.size(); ++i) {
        mx += seps[i];
        my += log_vals[i];
    }
    mx /= seps.size();
    my /= seps.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < seps.size(); ++i) {
        sxx += (seps[i] - mx) * (seps[i] - mx);
        sxy += (seps[i] - mx) * (log_vals[i] - my);
    }
    const double rate = -sxy / sxx;
    CHECK(rate >= 0.9);
}

TEST_CASE("commutator with a constant vanishes") {
    const SpectralGrid grid = SpectralGrid::make(1, 1024, 64.0);
    // scale so large the plateau covers the whole grid: zeta = 1 everywhere
    const CutoffFunction everywhere{10000.0};
    const CommutatorEstimate est = commutator_norm(grid, everywhere, 30, 1);
    CHECK(est.norm < 1e-12);
}

TEST_CASE("commutator norm halves when the scale doubles and obeys the Fourier bound") {
    const SpectralGrid grid = SpectralGrid::make(1, 8192, 64.0);
    double prev = 0.0;
    for (double R : {8.0, 16.0, 32.0, 64.0}) {
        const CutoffFunction zeta{R};
        const CommutatorEstimate est = commutator_norm(grid, zeta, 60, 5);
        const double bound = commutator_fourier_bound(grid, zeta);
        CHECK(est.norm <= bound * (1.0 + 1e-8));
        if (prev > 0.0) CHECK(est.norm <= 0.6 * prev);
        prev = est.norm;
    }
}

TEST_CASE("commutator preconditions") {
    const SpectralGrid grid = SpectralGrid::make(1, 256, 32.0);
    CHECK_THROWS_AS(commutator_norm(grid, CutoffFunction{0.5}), PreconditionError);
    CHECK_THROWS_AS(commutator_norm(grid, CutoffFunction{2.0}), PreconditionError);
}

TEST_CASE("cutoff profile endpoints are exact and the partition squares to one") {
    const CutoffFunction chi{10.0};
    CHECK(chi(0.5) == 1.0);
    CHECK(chi(1.0) == 1.0);  // r = R/10
    CHECK(chi(1.25) == 0.0); // r = R/8
    CHECK(chi(3.0) == 0.0);
    CHECK(chi(1.1) > 0.0);
    CHECK(chi(1.1) < 1.0);

    const SpectralGrid grid = SpectralGrid::make(1, 1024, 40.0);
    PartitionOfUnity part{16.0, Vector3d(1.0, 0, 0)};
    const auto J = part.sample(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = J[0][i] * J[0][i] + J[1][i] * J[1][i] + J[2][i] * J[2][i];
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("IMS error vanishes on a plateau-supported state") {
    const SpectralGrid grid = SpectralGrid::make(1, 4096, 256.0);
    const PartitionOfUnity part{160.0, Vector3d(1.0, 0, 0)};
    // J1 = 1 for |x| <= 16; narrow bump far from every transition
    const RealField psi = radial_bump(grid, Vector3d::Zero(), 4.0);
    CHECK(std::abs(ims_error(grid, part, psi)) <= 1e-8);
}

TEST_CASE("IMS error decays with the partition scale") {
    const SpectralGrid grid = SpectralGrid::make(1, 8192, 256.0);
    double prev = 0.0;
    for (double R : {8.0, 16.0, 32.0}) {
        const PartitionOfUnity part{R, Vector3d(1.0, 0, 0)};
        // Gaussian straddling the inner transition shell, scaled with R
        RealField psi = gaussian_field(grid, Vector3d(0.1125 * R, 0, 0), R / 32.0);
        double norm = std::sqrt(inner(grid, psi, psi));
        for (auto& x : psi) x /= norm;
        const double err = std::abs(ims_error(grid, part, psi));
        if (prev > 0.0) CHECK(err <= 0.7 * prev);
        prev = err;
    }
}

TEST_CASE("ground state of the free operator is the constant mode") {
    const SpectralGrid grid = SpectralGrid::make(1, 256, 20.0);
    const RealField zero(grid.size(), 0.0);
    const EigenResult r = ground_state(grid, zero, 1, 3);
    CHECK(std::abs(r.eigenvalues[0]) < 1e-10);
    CHECK(r.residuals[0] <= 1e-8);
}

TEST_CASE("smoothed well binds, decays exponentially, and deepens with Z") {
    const SpectralGrid grid = SpectralGrid::make(3, 32, 16.0);
    const double a = 2.0 * grid.spacing();
    const RealField v1 = smoothed_coulomb(grid, 1.0, a);
    const EigenResult r1 = ground_state(grid, v1, 1, 7);
    CHECK(r1.eigenvalues[0] < 0.0);
    CHECK(r1.residuals[0] <= 1e-8);

    // independent variational upper bound with a Gaussian trial
    {
        double best = 1e300;
        for (double sigma : {1.5, 2.0, 2.5, 3.0, 4.0}) {
            RealField trial = gaussian_field(grid, Vector3d::Zero(), sigma);
            const double nrm = std::sqrt(inner(grid, trial, trial));
            for (auto& x : trial) x /= nrm;
            double e = inner(grid, trial, apply_T(grid, trial));
            KahanSum pot;
            for (std::size_t i = 0; i < grid.size(); ++i)
                pot.add(v1[i] * trial[i] * trial[i]);
            e += pot.value() * grid.cell_volume();
            best = std::min(best, e);
        }
        CHECK(best < 0.0);                    // the bound state exists
        CHECK(r1.eigenvalues[0] <= best + 1e-8); // solver beats the trial
    }

    const DecayFit fit = decay_rate(grid, r1.eigenvectors[0], 5.0, r1.eigenvalues[0], 0.0);
    CHECK(fit.applicable);
    CHECK(fit.rate < 0.0);
    CHECK(fit.r_squared >= 0.95);

    const RealField v2 = smoothed_coulomb(grid, 2.0, a);
    const EigenResult r2 = ground_state(grid, v2, 1, 7);
    CHECK(r2.eigenvalues[0] < r1.eigenvalues[0]);
    const DecayFit fit2 = decay_rate(grid, r2.eigenvectors[0], 4.0, r2.eigenvalues[0], 0.0);
    CHECK(fit2.rate < fit.rate); // deeper well, faster decay
}

TEST_CASE("decay fit is not applicable to non-bound states") {
    const SpectralGrid grid = SpectralGrid::make(3, 16, 8.0);
    const RealField constant(grid.size(), 1.0);
    const DecayFit fit = decay_rate(grid, constant, 2.0, 0.0, 0.0);
    CHECK_FALSE(fit.applicable);
    CHECK_FALSE(fit.certified);
}

TEST_CASE("eigenvalues come out nondecreasing with small residuals") {
    const SpectralGrid grid = SpectralGrid::make(1, 512, 40.0);
    const RealField v = smoothed_coulomb(grid, 2.0, 0.4);
    const EigenResult r = ground_state(grid, v, 3, 11);
    for (std::size_t i = 1; i < r.eigenvalues.size(); ++i)
        CHECK(r.eigenvalues[i] >= r.eigenvalues[i - 1]);
    for (double res : r.residuals) CHECK(res <= 1e-8);
}

TEST_CASE("zhislin trial sweep: shape, crossover, and the trial span") {
    const SpectralGrid grid = SpectralGrid::make(3, 128, 160.0);
    const double a = 2.0 * grid.spacing();

    // Z = 1: the -c/R + d/R^2 shape with a crossover into negative values
    const RealField v1 = smoothed_coulomb(grid, 1.0, a);
    const ZhislinReport sweep = zhislin_trial_bound(grid, v1, {24.0, 36.0, 54.0, 81.0});
    CHECK(sweep.fit_c > 0.0);
    CHECK(sweep.fit_d > 0.0);
    CHECK(sweep.dips_below_floor);
    CHECK(sweep.values.front() > sweep.values.back()); // decreasing through the crossover

    // Z = 0: pure kinetic, positive, ~1/R^2 falloff
    const RealField v0(grid.size(), 0.0);
    const ZhislinReport free_sweep = zhislin_trial_bound(grid, v0, {24.0, 36.0, 54.0, 81.0});
    for (double val : free_sweep.values) CHECK(val > 0.0);
    std::vector<double> lr, lv;
    for (std::size_t i = 0; i < free_sweep.R_values.size(); ++i) {
        lr.push_back(std::log(free_sweep.R_values[i]));
        lv.push_back(std::log(free_sweep.values[i]));
    }
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        mx += lr[i];
        my += lv[i];
    }
    mx /= lr.size();
    my /= lr.size();
    for (std::size_t i = 0; i < lr.size(); ++i) {
        sxx += (lr[i] - mx) * (lr[i] - mx);
        sxy += (lr[i] - mx) * (lv[i] - my);
    }
    CHECK(sxy / sxx == doctest::Approx(-2.0).epsilon(0.1));

    // Z = 4: all four disjoint-scale quotients negative, cross terms far
    // below the diagonal scale (exactly zero up to kernel tails and grid
    // sampling of the disjoint annuli)
    const RealField v4 = smoothed_coulomb(grid, 4.0, a);
    const ZhislinReport multi = zhislin_trial_bound(grid, v4, {24.0, 36.0, 54.0, 81.0});
    double diag_scale = 0.0;
    for (double val : multi.values) {
        CHECK(val < 0.0);
        diag_scale = std::max(diag_scale, std::abs(val));
    }
    CHECK(multi.all_span_negative);
    CHECK(multi.max_cross_term < 1e-3 * diag_scale);
}

TEST_CASE("zhislin rejects supports larger than the grid") {
    const SpectralGrid grid = SpectralGrid::make(3, 32, 16.0);
    CHECK_THROWS_AS(zhislin_trial_bound(grid, RealField(grid.size(), 0.0), {4.0, 20.0}),
                    DomainError);
}

TEST_CASE("quadratic form of T is real on real fields") {
    const SpectralGrid grid = SpectralGrid::make(1, 512, 30.0);
    const RealField psi_r = random_field(grid, 77);
    ComplexField psi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = psi_r[i];
    const std::complex<double> form = inner(grid, psi, apply_T(grid, psi));
    CHECK(std::abs(form.imag()) <= 1e-12 * std::max(1.0, std::abs(form.real())));

    const PartitionOfUnity part{16.0, Eigen::Vector3d(1.0, 0, 0)};
    CHECK(std::isfinite(ims_error(grid, part, psi_r)));
}

TEST_CASE("solver reports non-convergence when the restart budget is too small") {
    const SpectralGrid grid = SpectralGrid::make(3, 16, 8.0);
    const RealField v = smoothed_coulomb(grid, 1.0, 1.0);
    CHECK_THROWS_AS(ground_state(grid, v, 3, 1, 1e-14, 1), ConvergenceError);
}
