#include "dispersia/bessel.hpp"

#include <cmath>

#include "dispersia/errors.hpp"

namespace dispersia {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

struct SeriesK01 {
    double k0;
    double k1;
};

// Ascending series for K0 and K1 (DLMF 10.31) with harmonic-number terms;
// full double accuracy for x <= 2 where the cancellation is mild.
SeriesK01 series_k01(double x) {
    const double q = 0.25 * x * x;
    const double lg = std::log(0.5 * x);

    double term_i0 = 1.0;     // q^k/(k!)^2
    double term_i1 = 0.5 * x; // (x/2) q^k/(k!(k+1)!)
    double i0 = term_i0, i1 = term_i1;
    double k0 = -(lg + kEulerGamma);
    double k1_sum = term_i1 * (1.0 - 2.0 * kEulerGamma); // H_0 + H_1 - 2g at k = 0
    double harmonic = 0.0;
    for (int k = 1; k < 40; ++k) {
        term_i0 *= q / (static_cast<double>(k) * k);
        term_i1 *= q / (static_cast<double>(k) * (k + 1));
        harmonic += 1.0 / k;
        i0 += term_i0;
        i1 += term_i1;
        k0 += term_i0 * (harmonic - lg - kEulerGamma);
        k1_sum += term_i1 * (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * kEulerGamma);
        if (term_i0 < 1e-19 * i0 && term_i1 < 1e-19 * i1) break;
    }
    const double k1 = 1.0 / x + lg * i1 - 0.5 * k1_sum;
    return {k0, k1};
}

// Chebyshev evaluation (Clenshaw), SLATEC dcsevl.
double chebyshev(double x, const double* cs, int n) {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    const double twox = 2.0 * x;
    for (int i = n - 1; i >= 0; --i) {
        b2 = b1;
        b1 = b0;
        b0 = twox * b1 - b2 + cs[i];
    }
    return 0.5 * (b0 - b2);
}

// Chebyshev tables for the exponentially scaled K0 and K1 on (2,8] and
// (8,inf) (SLATEC FNLIB AK0/AK02/AK1/AK12, Fullerton), truncated at double
// precision.
const double ak0cs[18] = {
    -0.07643947903327941424082978270088,
    -0.02235652605699819052023095550791,
    7.734181154693858235300618174047e-4,
    -4.281006688886099464452146435416e-5,
    3.08170017386297474365001482666e-6,
    -2.639367222009664974067448892723e-7,
    2.563713036403469206294088265742e-8,
    -2.742705549900201263857211915244e-9,
    3.169429658097499592080832873403e-10,
    -3.902353286962184141601065717962e-11,
    5.068040698188575402050092127286e-12,
    -6.889574741007870679541713557984e-13,
    9.744978497825917691388201336831e-14,
    -1.427332841884548505389855340122e-14,
    2.156412571021463039558062976527e-15,
    -3.34965425514956277218878205853e-16,
    5.335260216952911692145280392601e-17,
    -8.693669980890753807639622378837e-18,
};
const double ak02cs[14] = {
    -0.01201869826307592239839346212452,
    -0.009174852691025695310652561075713,
    1.444550931775005821048843878057e-4,
    -4.013614175435709728671021077879e-6,
    1.567831810852310672590348990333e-7,
    -7.77011043852173771031579975446e-9,
    4.611182576179717882533130529586e-10,
    -3.158592997860565770526665803309e-11,
    2.435018039365041127835887814329e-12,
    -2.074331387398347897709853373506e-13,
    1.925787280589917084742736504693e-14,
    -1.927554805838956103600347182218e-15,
    2.062198029197818278285237869644e-16,
    -2.341685117579242402603640195071e-17,
};
const double ak1cs[18] = {
    0.27443134069738829695257666227266,
    0.07571989953199367817089237814929,
    -0.0014410515564754061229853116175625,
    6.6501169551257479394251385477036e-5,
    -4.3699847095201407660580845089167e-6,
    3.5402774997630526799417139008534e-7,
    -3.3111637792932920208982688245704e-8,
    3.4459775819010534532311499770992e-9,
    -3.8989323474754271048981937492758e-10,
    4.7208197504658356400947449339005e-11,
    -6.047835662875356234537359156289e-12,
    8.1284948748658747888193837985663e-13,
    -1.1386945747147891428923915951042e-13,
    1.654035840846228232597294820509e-14,
    -2.4809025677068848221516010440533e-15,
    3.8292378907024096948429227299157e-16,
    -6.0647341040012418187768210377386e-17,
    9.8324256232648616038194004650666e-18,
};
const double ak12cs[14] = {
    0.06379308343739001036600488534102,
    0.02832887813049720935835030284708,
    -2.475370673905250345414545566732e-4,
    5.771972451607248820470976625763e-6,
    -2.068939219536548302745533196552e-7,
    9.739983441381804180309213097887e-9,
    -5.585336140380624984688895511129e-10,
    3.732996634046185240221212854731e-11,
    -2.825051961023225445135065754928e-12,
    2.372019002484144173643496955486e-13,
    -2.176677387991753979268301667938e-14,
    2.157914161616032453939562689706e-15,
    -2.290196930718269275991551338154e-16,
    2.582885729823274961919939565226e-17,
};

// Exponentially scaled K0, K1 for x > 2.
double scaled_k0(double x) {
    if (x <= 8.0) return (chebyshev((16.0 / x - 5.0) / 3.0, ak0cs, 18) + 1.25) / std::sqrt(x);
    return (chebyshev(16.0 / x - 1.0, ak02cs, 14) + 1.25) / std::sqrt(x);
}

double scaled_k1(double x) {
    if (x <= 8.0) return (chebyshev((16.0 / x - 5.0) / 3.0, ak1cs, 18) + 1.25) / std::sqrt(x);
    return (chebyshev(16.0 / x - 1.0, ak12cs, 14) + 1.25) / std::sqrt(x);
}

} // namespace

double bessel_k0(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k0: argument must be positive");
    if (x <= 2.0) return series_k01(x).k0;
    return std::exp(-x) * scaled_k0(x);
}

double bessel_k1(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k1: argument must be positive");
    if (x <= 2.0) return series_k01(x).k1;
    return std::exp(-x) * scaled_k1(x);
}

double bessel_k2(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k2: argument must be positive");
    // K_2 = K_0 + (2/x) K_1; both terms positive, no cancellation.
    if (x <= 2.0) {
        const auto [k0, k1] = series_k01(x);
        return k0 + 2.0 * k1 / x;
    }
    return std::exp(-x) * (scaled_k0(x) + 2.0 * scaled_k1(x) / x);
}

} // namespace dispersia
