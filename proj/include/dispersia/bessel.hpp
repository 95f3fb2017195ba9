#pragma once

namespace dispersia {

/// Modified Bessel functions of the second kind, K_0, K_1, K_2 for x > 0.
/// Ascending series below 2, exponentially scaled Chebyshev expansions of
/// the large-argument form above; ~1e-15 relative throughout.
double bessel_k0(double x);
double bessel_k1(double x);
double bessel_k2(double x);

} // namespace dispersia
