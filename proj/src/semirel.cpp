#include "dispersia/semirel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "dispersia/bessel.hpp"
#include "dispersia/kahan.hpp"

namespace dispersia {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
} // namespace

SpectralGrid SpectralGrid::make(int dim, int points_per_axis, double half_width) {
    if (dim != 1 && dim != 3) throw DomainError("SpectralGrid: dimension must be 1 or 3");
    if (!power_of_two(points_per_axis))
        throw DomainError("SpectralGrid: points per axis must be a power of two");
    if (!(half_width > 0.0)) throw DomainError("SpectralGrid: half-width must be positive");

    SpectralGrid g;
    g.dim_ = dim;
    g.n_ = points_per_axis;
    g.half_width_ = half_width;
    g.spacing_ = 2.0 * half_width / points_per_axis;
    g.total_ = 1;
    for (int a = 0; a < dim; ++a) g.total_ *= static_cast<std::size_t>(points_per_axis);

    g.momentum_abs_.resize(g.total_);
    g.symbol_.resize(g.total_);
    if (dim == 1) {
        for (int k = 0; k < g.n_; ++k) {
            const double p = g.momentum(k);
            g.momentum_abs_[k] = std::abs(p);
            g.symbol_[k] = std::sqrt(1.0 + p * p) - 1.0;
        }
    } else {
        std::size_t idx = 0;
        for (int kx = 0; kx < g.n_; ++kx)
            for (int ky = 0; ky < g.n_; ++ky)
                for (int kz = 0; kz < g.n_; ++kz, ++idx) {
                    const double px = g.momentum(kx), py = g.momentum(ky), pz = g.momentum(kz);
                    const double p2 = px * px + py * py + pz * pz;
                    g.momentum_abs_[idx] = std::sqrt(p2);
                    g.symbol_[idx] = std::sqrt(1.0 + p2) - 1.0;
                }
    }
    return g;
}

double SpectralGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing_;
    return v;
}

double SpectralGrid::momentum(int k) const {
    const int signed_k = (k <= n_ / 2 - 1) ? k : k - n_;
    return 2.0 * M_PI * signed_k / (2.0 * half_width_);
}

Eigen::Vector3d SpectralGrid::point(std::size_t flat) const {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    if (dim_ == 1) {
        x(0) = coordinate(static_cast<int>(flat));
    } else {
        const std::size_t nz = static_cast<std::size_t>(n_);
        x(2) = coordinate(static_cast<int>(flat % nz));
        x(1) = coordinate(static_cast<int>((flat / nz) % nz));
        x(0) = coordinate(static_cast<int>(flat / (nz * nz)));
    }
    return x;
}

FftWorkspace::FftWorkspace(const SpectralGrid& grid) : grid_(grid) {
    buffer_ = reinterpret_cast<std::complex<double>*>(
        fftw_malloc(sizeof(fftw_complex) * grid_.size()));
    if (!buffer_) throw std::bad_alloc();
    std::scoped_lock lock(plan_mutex());
    auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
    if (grid_.dim() == 1) {
        plan_fwd_ = fftw_plan_dft_1d(grid_.n(), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_bwd_ = fftw_plan_dft_1d(grid_.n(), raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
        plan_fwd_ = fftw_plan_dft_3d(grid_.n(), grid_.n(), grid_.n(), raw, raw, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
        plan_bwd_ = fftw_plan_dft_3d(grid_.n(), grid_.n(), grid_.n(), raw, raw, FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
    }
}

FftWorkspace::~FftWorkspace() {
    std::scoped_lock lock(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buffer_);
}

ComplexField FftWorkspace::transform(const ComplexField& psi) {
    if (psi.size() != grid_.size()) throw DomainError("transform: size mismatch");
    std::copy(psi.begin(), psi.end(), buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    // Continuum normalization cellvol / (2 pi)^{d/2}.
    const double scale = grid_.cell_volume() / std::pow(2.0 * M_PI, grid_.dim() / 2.0);
    ComplexField out(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = scale * buffer_[i];
    return out;
}

void FftWorkspace::apply_multiplier(const std::vector<double>& factor, const ComplexField& in,
                                    ComplexField& out) {
    if (in.size() != grid_.size() || factor.size() != grid_.size())
        throw DomainError("apply_multiplier: size mismatch");
    std::copy(in.begin(), in.end(), buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    for (std::size_t i = 0; i < grid_.size(); ++i) buffer_[i] *= factor[i];
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    const double inv = 1.0 / static_cast<double>(grid_.size());
    out.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = inv * buffer_[i];
}

ComplexField apply_T(const SpectralGrid& grid, const ComplexField& psi) {
    FftWorkspace ws(grid);
    ComplexField out;
    ws.apply_multiplier(grid.symbol(), psi, out);
    return out;
}

RealField apply_T(const SpectralGrid& grid, const RealField& psi) {
    FftWorkspace ws(grid);
    RealField out;
    apply_T(ws, psi, out);
    return out;
}

void apply_T(FftWorkspace& ws, const RealField& in, RealField& out) {
    const std::size_t n = ws.grid().size();
    if (in.size() != n) throw DomainError("apply_T: size mismatch");
    ComplexField cin(n), cout;
    for (std::size_t i = 0; i < n; ++i) cin[i] = in[i];
    ws.apply_multiplier(ws.grid().symbol(), cin, cout);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cout[i].real();
}

std::complex<double> inner(const SpectralGrid& grid, const ComplexField& f, const ComplexField& g) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw DomainError("inner: size mismatch");
    KahanSum re, im;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::complex<double> v = std::conj(f[i]) * g[i];
        re.add(v.real());
        im.add(v.imag());
    }
    return grid.cell_volume() * std::complex<double>(re.value(), im.value());
}

double inner(const SpectralGrid& grid, const RealField& f, const RealField& g) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw DomainError("inner: size mismatch");
    KahanSum sum;
    for (std::size_t i = 0; i < grid.size(); ++i) sum.add(f[i] * g[i]);
    return grid.cell_volume() * sum.value();
}

double support_distance(const SpectralGrid& grid, const RealField& f, const RealField& g) {
    std::vector<std::size_t> sf, sg;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (f[i] != 0.0) sf.push_back(i);
        if (g[i] != 0.0) sg.push_back(i);
    }
    if (sf.empty() || sg.empty()) return std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t a : sf) {
        const Eigen::Vector3d xa = grid.point(a);
        for (std::size_t b : sg) best2 = std::min(best2, (grid.point(b) - xa).squaredNorm());
    }
    return std::sqrt(best2);
}

double kernel_form(const SpectralGrid& grid, const RealField& f, const RealField& g, double R) {
    if (grid.dim() != 3) throw DomainError("kernel_form: the Bessel kernel applies on 3D grids");
    if (!(R >= 1.0)) throw PreconditionError("kernel_form: separation must be at least 1");
    if (f.size() != grid.size() || g.size() != grid.size())
        throw DomainError("kernel_form: size mismatch");

    std::vector<std::size_t> sf, sg;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (f[i] != 0.0) sf.push_back(i);
        if (g[i] != 0.0) sg.push_back(i);
    }
    if (sg.empty()) return 0.0;
    if (support_distance(grid, f, g) < R)
        throw PreconditionError("kernel_form: supports closer than the stated separation");

    const double cell2 = grid.cell_volume() * grid.cell_volume();
    KahanSum sum;
    for (std::size_t a : sf) {
        const Eigen::Vector3d xa = grid.point(a);
        for (std::size_t b : sg) {
            const double dist = (grid.point(b) - xa).norm();
            sum.add(bessel_k2(dist) / (dist * dist) * f[a] * g[b]);
        }
    }
    return -sum.value() * cell2 / (2.0 * M_PI * M_PI);
}

double CutoffFunction::operator()(double r) const {
    const double lo = scale / 10.0, hi = scale / 8.0;
    if (r <= lo) return 1.0;
    if (r >= hi) return 0.0;
    const double s = (r - lo) / (hi - lo);
    const double a = std::exp(-1.0 / (1.0 - s));
    const double b = std::exp(-1.0 / s);
    return a / (a + b);
}

double PartitionOfUnity::v(int i, const Eigen::Vector3d& y) const {
    const CutoffFunction unit{1.0};
    const double v1 = unit(y.norm());
    const double v2 = unit((y - separation).norm());
    if (i == 1) return v1;
    if (i == 2) return v2;
    return 1.0 - v1 - v2;
}

double PartitionOfUnity::J(int i, const Eigen::Vector3d& x) const {
    if (i < 0 || i > 2) throw DomainError("PartitionOfUnity::J: index must be 0, 1 or 2");
    const Eigen::Vector3d y = x / scale;
    const double v0 = v(0, y), v1 = v(1, y), v2 = v(2, y);
    const double norm = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
    const double vi = (i == 0) ? v0 : (i == 1 ? v1 : v2);
    return vi / norm;
}

std::array<RealField, 3> PartitionOfUnity::sample(const SpectralGrid& grid) const {
    std::array<RealField, 3> out;
    for (auto& f : out) f.resize(grid.size());
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Eigen::Vector3d y = grid.point(idx) / scale;
        const double v0 = v(0, y), v1 = v(1, y), v2 = v(2, y);
        const double norm = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
        out[0][idx] = v0 / norm;
        out[1][idx] = v1 / norm;
        out[2][idx] = v2 / norm;
    }
    return out;
}

CommutatorEstimate commutator_norm(const SpectralGrid& grid, const CutoffFunction& zeta,
                                   int iterations, std::uint64_t seed) {
    if (!(zeta.scale > 1.0)) throw PreconditionError("commutator_norm: scale must exceed 1");
    const double shell = zeta.scale / 8.0 - zeta.scale / 10.0;
    if (shell / grid.spacing() < 8.0)
        throw PreconditionError("commutator_norm: transition shell resolved by fewer than 8 points");

    RealField zfield(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) zfield[i] = zeta(grid.point(i).norm());

    FftWorkspace ws(grid);
    ComplexField v(grid.size()), tv, zv(grid.size()), tmp;
    SplitRng rng(seed, 0xC033);
    for (auto& c : v) c = std::complex<double>(rng.normal(), rng.normal());

    auto commutator = [&](const ComplexField& in, ComplexField& out) {
        // [T, zeta] in = T(zeta in) - zeta T(in)
        for (std::size_t i = 0; i < grid.size(); ++i) zv[i] = zfield[i] * in[i];
        ws.apply_multiplier(grid.symbol(), zv, out);
        ws.apply_multiplier(grid.symbol(), in, tmp);
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] -= zfield[i] * tmp[i];
    };

    double lambda = 0.0, prev = -1.0;
    bool converged = false;
    int used = 0;
    ComplexField cv, ccv;
    for (int it = 0; it < iterations; ++it) {
        ++used;
        commutator(v, cv);
        // adjoint of the anti-Hermitian commutator is its negative
        commutator(cv, ccv);
        for (auto& c : ccv) c = -c;
        double norm = 0.0;
        for (const auto& c : ccv) norm += std::norm(c);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            lambda = 0.0;
            converged = true;
            break;
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            dot += (std::conj(v[i]) * ccv[i]).real();
        double vnorm2 = 0.0;
        for (const auto& c : v) vnorm2 += std::norm(c);
        lambda = dot / vnorm2;
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = ccv[i] / norm;
        if (prev >= 0.0 && std::abs(lambda - prev) <= 1e-10 * std::max(lambda, 1e-30)) {
            converged = true;
            break;
        }
        prev = lambda;
    }
    return {std::sqrt(std::max(lambda, 0.0)), converged, static_cast<double>(used)};
}

double commutator_fourier_bound(const SpectralGrid& grid, const CutoffFunction& zeta) {
    ComplexField zfield(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) zfield[i] = zeta(grid.point(i).norm());
    FftWorkspace ws(grid);
    const ComplexField spectrum = ws.transform(zfield);
    const double mode_volume = std::pow(M_PI / grid.half_width(), grid.dim());
    KahanSum sum;
    for (std::size_t i = 0; i < grid.size(); ++i)
        sum.add(grid.momentum_abs()[i] * std::abs(spectrum[i]));
    return sum.value() * mode_volume / std::pow(2.0 * M_PI, grid.dim() / 2.0);
}

double ims_error(const SpectralGrid& grid, const PartitionOfUnity& partition,
                 const RealField& psi) {
    if (psi.size() != grid.size()) throw DomainError("ims_error: size mismatch");
    FftWorkspace ws(grid);
    RealField tpsi;
    apply_T(ws, psi, tpsi);
    double err = inner(grid, psi, tpsi);
    const auto J = partition.sample(grid);
    RealField jpsi(grid.size()), tjpsi;
    for (int i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < grid.size(); ++k) jpsi[k] = J[i][k] * psi[k];
        apply_T(ws, jpsi, tjpsi);
        err -= inner(grid, jpsi, tjpsi);
    }
    return err;
}

// --- eigensolver ---------------------------------------------------------------

namespace {

double dot(const RealField& a, const RealField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const RealField& x, RealField& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

} // namespace

EigenResult ground_state(const SpectralGrid& grid, const RealField& potential, int k,
                         std::uint64_t seed, double tol, int max_restarts) {
    if (potential.size() != grid.size()) throw DomainError("ground_state: size mismatch");
    if (k < 1) throw DomainError("ground_state: need k >= 1");
    for (double v : potential)
        if (!std::isfinite(v)) throw DomainError("ground_state: potential must be bounded below");

    const std::size_t n = grid.size();
    const int m = std::max(24, 4 * k + 12); // Krylov budget per restart
    const int keep = std::min(m - 4, std::max(k + 6, 2 * k));

    FftWorkspace ws(grid);
    RealField hq(n);
    auto apply_h = [&](const RealField& x, RealField& out) {
        apply_T(ws, x, out);
        for (std::size_t i = 0; i < n; ++i) out[i] += potential[i] * x[i];
    };

    std::vector<RealField> basis;
    basis.reserve(m + 1);
    Eigen::MatrixXd projected = Eigen::MatrixXd::Zero(m + 1, m + 1);

    SplitRng rng(seed, 0x6A2C);
    RealField start(n);
    for (auto& x : start) x = rng.normal();
    {
        const double nrm = std::sqrt(dot(start, start));
        for (auto& x : start) x /= nrm;
    }
    basis.push_back(start);

    EigenResult result;
    result.restarts = 0;

    for (int restart = 0; restart < max_restarts; ++restart) {
        result.restarts = restart + 1;
        // Expand the basis to m vectors with explicit projection columns.
        while (static_cast<int>(basis.size()) < m) {
            const int j = static_cast<int>(basis.size()) - 1;
            apply_h(basis[j], hq);
            for (int i = 0; i <= j; ++i) {
                const double c = dot(basis[i], hq);
                projected(i, j) = c;
                projected(j, i) = c;
            }
            RealField w = hq;
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) axpy(-dot(basis[i], w), basis[i], w);
            double beta = std::sqrt(dot(w, w));
            if (beta < 1e-12) { // invariant subspace hit; restart direction
                for (auto& x : w) x = rng.normal();
                for (int pass = 0; pass < 2; ++pass)
                    for (int i = 0; i <= j; ++i) axpy(-dot(basis[i], w), basis[i], w);
                beta = std::sqrt(dot(w, w));
            }
            for (auto& x : w) x /= beta;
            basis.push_back(std::move(w));
        }
        // Final column for the full m-basis; keep the orthogonalized
        // continuation vector so the restart preserves the Krylov recursion.
        RealField continuation;
        {
            const int j = m - 1;
            apply_h(basis[j], hq);
            for (int i = 0; i <= j; ++i) {
                const double c = dot(basis[i], hq);
                projected(i, j) = c;
                projected(j, i) = c;
            }
            continuation = hq;
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i)
                    axpy(-dot(basis[i], continuation), basis[i], continuation);
            const double beta = std::sqrt(dot(continuation, continuation));
            if (beta > 1e-12)
                for (auto& x : continuation) x /= beta;
            else
                continuation.clear();
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(projected.topLeftCorner(m, m));
        const Eigen::VectorXd theta = es.eigenvalues();
        const Eigen::MatrixXd Y = es.eigenvectors();

        // Ritz vectors for the k lowest pairs and their true residuals.
        std::vector<RealField> ritz(k, RealField(n, 0.0));
        std::vector<double> resid(k);
        bool all_converged = true;
        for (int c = 0; c < k; ++c) {
            for (int i = 0; i < m; ++i) axpy(Y(i, c), basis[i], ritz[c]);
            apply_h(ritz[c], hq);
            axpy(-theta(c), ritz[c], hq);
            resid[c] = std::sqrt(dot(hq, hq));
            if (resid[c] > tol) all_converged = false;
        }
        if (all_converged) {
            result.eigenvalues.assign(theta.data(), theta.data() + k);
            result.eigenvectors = std::move(ritz);
            result.residuals = std::move(resid);
            return result;
        }

        // Thick restart: keep the lowest Ritz vectors plus the Lanczos
        // continuation vector (a fresh random direction on breakdown).
        std::vector<RealField> kept;
        kept.reserve(keep + 1);
        for (int c = 0; c < keep; ++c) {
            RealField w(n, 0.0);
            for (int i = 0; i < m; ++i) axpy(Y(i, c), basis[i], w);
            kept.push_back(std::move(w));
        }
        RealField next;
        if (!continuation.empty()) {
            next = std::move(continuation);
        } else {
            next.resize(n);
            for (auto& x : next) x = rng.normal();
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : kept) axpy(-dot(b, next), b, next);
        {
            const double nrm = std::sqrt(dot(next, next));
            for (auto& x : next) x /= nrm;
        }
        kept.push_back(std::move(next));
        basis = std::move(kept);
        projected.setZero();
        for (int c = 0; c < keep; ++c) projected(c, c) = theta(c);
        // The column coupling the fresh direction fills in on the next
        // expansion step through the explicit projection.
        {
            const int j = keep;
            apply_h(basis[j], hq);
            for (int i = 0; i <= j; ++i) {
                const double c = dot(basis[i], hq);
                projected(i, j) = c;
                projected(j, i) = c;
            }
        }
    }
    throw ConvergenceError("ground_state: restart cap reached before residual tolerance");
}

DecayFit decay_rate(const SpectralGrid& grid, const RealField& psi, double threshold_radius,
                    double eigenvalue, double essential_floor) {
    DecayFit fit;
    if (eigenvalue >= essential_floor) return fit; // not applicable

    const double r_max = 0.9 * grid.half_width();
    const int shells = static_cast<int>(r_max / grid.spacing());
    std::vector<double> sum(shells, 0.0);
    std::vector<int> count(shells, 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.point(i).norm();
        const int s = static_cast<int>(r / grid.spacing());
        if (s < shells) {
            sum[s] += std::abs(psi[i]);
            count[s] += 1;
        }
    }
    for (int s = 0; s < shells; ++s) {
        const double center = (s + 0.5) * grid.spacing();
        if (center < threshold_radius || count[s] == 0) continue;
        const double avg = sum[s] / count[s];
        if (avg < 1e-14) break; // underflow window truncated
        fit.radii.push_back(center);
        fit.shell_log_average.push_back(std::log(avg));
    }
    if (fit.radii.size() < 5)
        throw DomainError("decay_rate: too few usable shells beyond the threshold radius");

    const std::size_t nn = fit.radii.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < nn; ++i) {
        mx += fit.radii[i];
        my += fit.shell_log_average[i];
    }
    mx /= nn;
    my /= nn;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < nn; ++i) {
        const double dx = fit.radii[i] - mx, dy = fit.shell_log_average[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.applicable = true;
    fit.rate = sxy / sxx;
    fit.r_squared = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.certified = fit.rate < 0.0 && fit.r_squared >= 0.95;
    return fit;
}

namespace {

double annulus_bump(double r) {
    // Smooth bump supported exactly on {5/4 <= r <= 7/4}.
    const double u = 4.0 * (r - 1.5);
    if (u <= -1.0 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}

} // namespace

ZhislinReport zhislin_trial_bound(const SpectralGrid& grid, const RealField& nuclear_potential,
                                  const std::vector<double>& R_values, double floor) {
    if (grid.dim() != 3) throw DomainError("zhislin_trial_bound: needs a 3D grid");
    if (R_values.size() < 2) throw DomainError("zhislin_trial_bound: need at least two scales");
    for (double R : R_values)
        if (1.75 * R > 0.95 * grid.half_width())
            throw DomainError("zhislin_trial_bound: grid too small to hold the scaled support");

    FftWorkspace ws(grid);
    ZhislinReport report;
    report.R_values = R_values;
    report.floor = floor;

    const std::size_t n = grid.size();
    std::vector<RealField> trials;
    trials.reserve(R_values.size());
    for (double R : R_values) {
        RealField f(n);
        const double scale = std::pow(R, -1.5);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = scale * annulus_bump(grid.point(i).norm() / R);
        const double nrm = std::sqrt(inner(grid, f, f));
        if (nrm <= 0.0) throw DomainError("zhislin_trial_bound: trial function vanished on grid");
        for (auto& x : f) x /= nrm;
        trials.push_back(std::move(f));
    }

    std::vector<RealField> t_applied(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) apply_T(ws, trials[i], t_applied[i]);

    for (std::size_t i = 0; i < trials.size(); ++i) {
        const double kin = inner(grid, trials[i], t_applied[i]);
        KahanSum pot;
        for (std::size_t p = 0; p < n; ++p)
            pot.add(nuclear_potential[p] * trials[i][p] * trials[i][p]);
        const double pot_val = pot.value() * grid.cell_volume();
        report.kinetic.push_back(kin);
        report.potential.push_back(pot_val);
        report.values.push_back(kin + pot_val);
    }

    // Fit value(R) = -c/R + d/R^2 by least squares in (1/R, 1/R^2).
    {
        double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 0; i < R_values.size(); ++i) {
            const double x1 = -1.0 / R_values[i];
            const double x2 = 1.0 / (R_values[i] * R_values[i]);
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * report.values[i];
            b2 += x2 * report.values[i];
        }
        const double det = a11 * a22 - a12 * a12;
        report.fit_c = (b1 * a22 - b2 * a12) / det;
        report.fit_d = (a11 * b2 - a12 * b1) / det;
    }

    std::size_t arg = 0;
    for (std::size_t i = 1; i < report.values.size(); ++i)
        if (report.values[i] < report.values[arg]) arg = i;
    report.min_value = report.values[arg];
    report.argmin_R = R_values[arg];
    report.dips_below_floor = report.min_value < floor;

    // Projected quadratic form on the whole trial span.
    const int t = static_cast<int>(trials.size());
    Eigen::MatrixXd M(t, t), S(t, t);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j) {
            double mij = inner(grid, trials[i], t_applied[j]);
            KahanSum pot;
            for (std::size_t p = 0; p < n; ++p)
                pot.add(nuclear_potential[p] * trials[i][p] * trials[j][p]);
            mij += pot.value() * grid.cell_volume();
            M(i, j) = mij;
            S(i, j) = inner(grid, trials[i], trials[j]);
        }
    M = 0.5 * (M + M.transpose()).eval();
    S = 0.5 * (S + S.transpose()).eval();
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j)
            if (i != j) report.max_cross_term = std::max(report.max_cross_term, std::abs(M(i, j)));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(M, S);
    report.span_eigenvalues.assign(ges.eigenvalues().data(), ges.eigenvalues().data() + t);
    report.all_span_negative = ges.eigenvalues().maxCoeff() < floor;
    return report;
}

RealField smoothed_coulomb(const SpectralGrid& grid, double Z, double a,
                           const Eigen::Vector3d& center) {
    RealField v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r2 = (grid.point(i) - center).squaredNorm();
        v[i] = -Z / std::sqrt(r2 + a * a);
    }
    return v;
}

RealField radial_bump(const SpectralGrid& grid, const Eigen::Vector3d& center, double radius) {
    RealField f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double u = (grid.point(i) - center).norm() / radius;
        f[i] = (u < 1.0) ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
    }
    return f;
}

RealField gaussian_field(const SpectralGrid& grid, const Eigen::Vector3d& center, double sigma) {
    RealField f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r2 = (grid.point(i) - center).squaredNorm();
        f[i] = std::exp(-r2 / (2.0 * sigma * sigma));
    }
    return f;
}

RealField truncated_gaussian(const SpectralGrid& grid, const Eigen::Vector3d& center,
                             double sigma, double radius) {
    RealField f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r2 = (grid.point(i) - center).squaredNorm();
        f[i] = (r2 <= radius * radius) ? std::exp(-r2 / (2.0 * sigma * sigma)) : 0.0;
    }
    return f;
}

} // namespace dispersia
