#include "dispersia/coulomb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "dispersia/kahan.hpp"
#include "dispersia/multipole.hpp"

namespace dispersia {

namespace {
constexpr int kChunks = 64; // fixed reduction structure, independent of thread cap
}

int coulomb_thread_count() {
    const char* env = std::getenv("DISPERSIA_THREADS");
    if (!env) return 1;
    const long n = std::strtol(env, nullptr, 10);
    return static_cast<int>(std::clamp(n, 1L, static_cast<long>(kChunks)));
}

double coulomb_interaction(const ChargeDensity& rho1, const ChargeDensity& rho2,
                           const Configuration& tau) {
    const double support_limit = tau.L / 8.0;
    if (rho1.max_radius() > support_limit || rho2.max_radius() > support_limit)
        throw PreconditionError("coulomb_interaction: support radius exceeds L/8");

    const std::size_t n1 = rho1.size(), n2 = rho2.size();
    std::vector<Eigen::Vector3d> placed1(n1), placed2(n2);
    for (std::size_t i = 0; i < n1; ++i) placed1[i] = tau.U * rho1.points[i];
    const Eigen::Vector3d shift(tau.L, 0.0, 0.0);
    for (std::size_t j = 0; j < n2; ++j) placed2[j] = tau.V * rho2.points[j] + shift;

    // Outer index split into a fixed number of chunks; each chunk is Kahan
    // summed and the chunk results are combined in chunk order, so the value
    // does not depend on how many threads service the chunks.
    std::vector<double> chunk_sum(kChunks, 0.0);
    std::vector<char> singular(kChunks, 0);
    auto run_chunk = [&](int c) {
        KahanSum acc;
        const std::size_t lo = n1 * static_cast<std::size_t>(c) / kChunks;
        const std::size_t hi = n1 * static_cast<std::size_t>(c + 1) / kChunks;
        for (std::size_t i = lo; i < hi; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                const double dist = (placed2[j] - placed1[i]).norm();
                if (dist < 1e-12) {
                    singular[c] = 1;
                    return;
                }
                acc.add(rho1.weights[i] * rho2.weights[j] / dist);
            }
        chunk_sum[c] = acc.value();
    };

    const int threads = coulomb_thread_count();
    if (threads <= 1) {
        for (int c = 0; c < kChunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int c = t; c < kChunks; c += threads) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    for (int c = 0; c < kChunks; ++c)
        if (singular[c]) throw SingularityError("coulomb_interaction: coincident placed points");
    KahanSum total;
    for (int c = 0; c < kChunks; ++c) total.add(chunk_sum[c]);
    return total.value();
}

double expansion_value(const ChargeDensity& rho1, const ChargeDensity& rho2,
                       const Configuration& tau, int K) {
    if (K < 2 || K > 6) throw DomainError("expansion_value: K must be in [2,6]");
    const ChargeDensity rot1 = rotate_density(tau.U, rho1);
    const ChargeDensity rot2 = rotate_density(tau.V, rho2);
    KahanSum sum;
    for (int total = 2; total <= K - 1; ++total)
        for (int n = 0; n <= total; ++n) {
            const int m = total - n;
            if (n > 4 || m > 4) continue;
            sum.add(interaction_coefficient(n, m, rot1, rot2) / std::pow(tau.L, total + 1));
        }
    return sum.value();
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

ExpansionReport verify_expansion_order(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                       const Rotation& U, const Rotation& V, int K,
                                       const std::vector<double>& L_values) {
    if (L_values.size() < 3)
        throw DomainError("verify_expansion_order: need at least 3 separations");
    for (std::size_t i = 1; i < L_values.size(); ++i)
        if (L_values[i] <= L_values[i - 1])
            throw DomainError("verify_expansion_order: L values must be strictly increasing");

    ExpansionReport report;
    report.K = K;
    report.L_values = L_values;
    report.slope_threshold = -(K + 1) + 0.3;

    auto neutral = [](const ChargeDensity& rho) {
        double aw = 0.0;
        for (double w : rho.weights) aw += std::abs(w);
        return std::abs(total_charge(rho)) <= 1e-9 * std::max(1.0, aw);
    };
    report.hypothesis_violation = !neutral(rho1) || !neutral(rho2);

    std::vector<double> log_L, log_rem;
    for (double L : L_values) {
        const Configuration tau(L, U, V);
        const double exact = coulomb_interaction(rho1, rho2, tau);
        const double trunc = expansion_value(rho1, rho2, tau, K);
        report.exact.push_back(exact);
        report.truncated.push_back(trunc);
        const double rem = std::abs(exact - trunc);
        if (rem < 1e-14) {
            report.machine_precision = true;
        } else {
            log_L.push_back(std::log(L));
            log_rem.push_back(std::log(rem));
        }
    }
    if (!report.machine_precision) {
        report.fitted_slope = fit_slope(log_L, log_rem);
        report.order_ok = *report.fitted_slope <= report.slope_threshold;
    }
    return report;
}

} // namespace dispersia
