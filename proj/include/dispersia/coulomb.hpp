#pragma once

#include <optional>
#include <vector>

#include "dispersia/charge_density.hpp"

namespace dispersia {

/// Number of worker threads for the pair sums, capped by the fixed chunk
/// count so results are bitwise independent of the cap. Reads
/// DISPERSIA_THREADS (default 1).
int coulomb_thread_count();

/// Brute-force Coulomb interaction between the two placed clouds:
///   sum_x sum_y w_x w_y / |L e1 + V y - U x|
/// with compensated accumulation over a fixed chunk structure.
/// Preconditions: each density supported in a ball of radius L/8 about its
/// own center, no coincident placed points.
double coulomb_interaction(const ChargeDensity& rho1, const ChargeDensity& rho2,
                           const Configuration& tau);

/// Truncated multipolar expansion sum_{2 <= n+m <= K-1} F^(n,m)/L^(n+m+1)
/// evaluated on the rotated densities. K in [2,6]; K = 2 gives 0.
double expansion_value(const ChargeDensity& rho1, const ChargeDensity& rho2,
                       const Configuration& tau, int K);

struct ExpansionReport {
    std::vector<double> L_values;
    std::vector<double> exact;
    std::vector<double> truncated;
    int K = 0;
    /// Least-squares slope of log|exact - truncated| vs log L; absent when
    /// the remainder sits at machine precision.
    std::optional<double> fitted_slope;
    double slope_threshold = 0.0; ///< -(K+1) + 0.3
    bool order_ok = false;        ///< fitted_slope <= slope_threshold
    bool machine_precision = false;
    /// Set when a density is not neutral (the stated remainder order holds
    /// for neutral densities; the report is still produced).
    bool hypothesis_violation = false;
};

/// Measures the remainder of the order-K truncation over a ladder of
/// separations and fits its decay exponent.
ExpansionReport verify_expansion_order(const ChargeDensity& rho1, const ChargeDensity& rho2,
                                       const Rotation& U, const Rotation& V, int K,
                                       const std::vector<double>& L_values);

/// Ordinary least squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace dispersia
