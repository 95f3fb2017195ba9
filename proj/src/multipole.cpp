#include "dispersia/multipole.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "dispersia/kahan.hpp"

namespace dispersia {

MultiIndex sorted_index(MultiIndex idx) {
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<MultiIndex> sorted_indices(int order) {
    if (order < 0) throw DomainError("sorted_indices: negative order");
    std::vector<MultiIndex> out;
    MultiIndex idx(order, 1);
    while (true) {
        out.push_back(idx);
        int pos = order - 1;
        while (pos >= 0 && idx[pos] == 3) --pos;
        if (pos < 0) break;
        const int v = idx[pos] + 1;
        for (int j = pos; j < order; ++j) idx[j] = v;
    }
    if (order == 0) out = {MultiIndex{}};
    return out;
}

SymmetricTensor::SymmetricTensor(int order, std::map<MultiIndex, double> entries)
    : order_(order), entries_(std::move(entries)) {
    for (const auto& [idx, val] : entries_) {
        if (static_cast<int>(idx.size()) != order_)
            throw ValidationError("SymmetricTensor: index length does not match order");
        if (!std::is_sorted(idx.begin(), idx.end()))
            throw ValidationError("SymmetricTensor: index not sorted");
    }
}

double SymmetricTensor::entry(const MultiIndex& idx) const {
    const auto it = entries_.find(sorted_index(idx));
    if (it == entries_.end()) throw DomainError("SymmetricTensor: missing entry");
    return it->second;
}

double SymmetricTensor::max_abs() const {
    double m = 0.0;
    for (const auto& [idx, val] : entries_) m = std::max(m, std::abs(val));
    return m;
}

double SymmetricTensor::contract(const std::vector<Eigen::Vector3d>& hs) const {
    if (static_cast<int>(hs.size()) != order_)
        throw DomainError("SymmetricTensor::contract: wrong number of vectors");
    if (order_ == 0) return entries_.begin()->second;
    KahanSum sum;
    MultiIndex idx(order_, 1);
    while (true) {
        double prod = entry(idx);
        for (int j = 0; j < order_; ++j) prod *= hs[j](idx[j] - 1);
        sum.add(prod);
        int pos = order_ - 1;
        while (pos >= 0 && idx[pos] == 3) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int j = pos + 1; j < order_; ++j) idx[j] = 1;
    }
    return sum.value();
}

// --- derivative engine -----------------------------------------------------

InverseNormDerivative InverseNormDerivative::differentiate(int axis) const {
    InverseNormDerivative out;
    for (const auto& t : terms_) {
        // d/dx_j [c x^a / |x|^k] = c a_j x^(a-e_j)/|x|^k - c k x^(a+e_j)/|x|^(k+2)
        if (t.pow[axis] > 0) {
            Term u = t;
            u.coeff *= t.pow[axis];
            u.pow[axis] -= 1;
            out.terms_.push_back(u);
        }
        Term v = t;
        v.coeff *= -t.inv_norm_pow;
        v.pow[axis] += 1;
        v.inv_norm_pow += 2;
        out.terms_.push_back(v);
    }
    out.combine();
    return out;
}

void InverseNormDerivative::combine() {
    std::map<std::pair<std::array<int, 3>, int>, double> acc;
    for (const auto& t : terms_) acc[{t.pow, t.inv_norm_pow}] += t.coeff;
    terms_.clear();
    for (const auto& [key, coeff] : acc)
        if (coeff != 0.0) terms_.push_back({coeff, key.first, key.second});
}

double InverseNormDerivative::evaluate(const Eigen::Vector3d& x) const {
    const double r = x.norm();
    if (r == 0.0) throw SingularityError("InverseNormDerivative: evaluation at the origin");
    double sum = 0.0;
    for (const auto& t : terms_) {
        double v = t.coeff;
        for (int a = 0; a < 3; ++a)
            for (int p = 0; p < t.pow[a]; ++p) v *= x(a);
        sum += v / std::pow(r, t.inv_norm_pow);
    }
    return sum;
}

double InverseNormDerivative::evaluate_scaled(const Eigen::Vector3d& x, int norm_power) const {
    const double r = x.norm();
    double sum = 0.0;
    for (const auto& t : terms_) {
        const int residual = norm_power - t.inv_norm_pow; // even and >= 0 for moment weights
        double v = t.coeff;
        for (int a = 0; a < 3; ++a)
            for (int p = 0; p < t.pow[a]; ++p) v *= x(a);
        sum += (residual == 0) ? v : v * std::pow(r, residual);
    }
    return sum;
}

const InverseNormDerivative& InverseNormDerivative::get(const MultiIndex& idx) {
    if (idx.size() > 8) throw DomainError("coulomb derivatives: order above 8 not tabulated");
    if (!std::is_sorted(idx.begin(), idx.end()))
        throw DomainError("InverseNormDerivative::get: index must be sorted");
    static std::map<MultiIndex, InverseNormDerivative> cache = [] {
        std::map<MultiIndex, InverseNormDerivative> seed;
        InverseNormDerivative base;
        base.terms_.push_back({1.0, {0, 0, 0}, 1}); // 1/|x|
        seed.emplace(MultiIndex{}, std::move(base));
        return seed;
    }();
    static std::mutex mutex;
    std::scoped_lock lock(mutex);
    auto it = cache.find(idx);
    if (it != cache.end()) return it->second;
    // Build missing prefixes bottom-up (indices are sorted, so every prefix
    // is itself a valid sorted index).
    for (std::size_t len = 1; len <= idx.size(); ++len) {
        const MultiIndex prefix(idx.begin(), idx.begin() + len);
        if (cache.count(prefix)) continue;
        const MultiIndex parent(idx.begin(), idx.begin() + len - 1);
        cache.emplace(prefix, cache.at(parent).differentiate(prefix.back() - 1));
    }
    return cache.at(idx);
}

// --- moments and coefficients ----------------------------------------------

MultipoleTensor multipole_moment(const ChargeDensity& rho, int order) {
    if (order < 0 || order > 4) throw DomainError("multipole_moment: order must be in 0..4");
    if (order == 0)
        return MultipoleTensor(0, {{MultiIndex{}, total_charge(rho)}});

    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho.points[i].squaredNorm() == 0.0 && rho.weights[i] != 0.0)
            throw SingularityError("multipole_moment: support point at the origin with order >= 1");

    double factor = 1.0;
    for (int j = 1; j <= order; ++j) factor *= j;
    factor = ((order % 2) ? -1.0 : 1.0) / factor;
    const int norm_power = 2 * order + 1;

    std::map<MultiIndex, double> entries;
    for (const auto& idx : sorted_indices(order)) {
        const auto& deriv = InverseNormDerivative::get(idx);
        KahanSum sum;
        for (std::size_t i = 0; i < rho.size(); ++i)
            sum.add(rho.weights[i] * deriv.evaluate_scaled(rho.points[i], norm_power));
        entries[idx] = factor * sum.value();
    }
    return MultipoleTensor(order, std::move(entries));
}

CoulombDerivativeTensor coulomb_derivatives(int order) {
    if (order < 0 || order > 8) throw DomainError("coulomb_derivatives: order must be in 0..8");
    const Eigen::Vector3d e1(1.0, 0.0, 0.0);
    std::map<MultiIndex, double> entries;
    for (const auto& idx : sorted_indices(order))
        entries[idx] = InverseNormDerivative::get(idx).evaluate(e1);
    return CoulombDerivativeTensor(order, std::move(entries));
}

double interaction_prefactor(int n, int m) {
    double denom = 1.0;
    for (int i = 1; i <= m; ++i) denom *= (2 * i - 1);
    for (int j = 1; j <= n; ++j) denom *= (2 * j - 1);
    return ((m % 2) ? -1.0 : 1.0) / denom;
}

double interaction_coefficient(int n, int m, const ChargeDensity& rho1,
                               const ChargeDensity& rho2) {
    if (n < 0 || m < 0 || n + m > 5)
        throw DomainError("interaction_coefficient: need n,m >= 0 and n+m <= 5");
    const MultipoleTensor m1 = multipole_moment(rho1, n);
    const MultipoleTensor m2 = multipole_moment(rho2, m);
    const CoulombDerivativeTensor d = coulomb_derivatives(n + m);

    // Lexicographic loop over all 3^n x 3^m unsorted index tuples.
    const int total = n + m;
    MultiIndex tuple(total, 1);
    MultiIndex ji(n), ki(m);
    KahanSum sum;
    while (true) {
        for (int a = 0; a < n; ++a) ji[a] = tuple[a];
        for (int b = 0; b < m; ++b) ki[b] = tuple[n + b];
        sum.add(m1.entry(ji) * m2.entry(ki) * d.entry(tuple));
        int pos = total - 1;
        while (pos >= 0 && tuple[pos] == 3) --pos;
        if (pos < 0) break;
        ++tuple[pos];
        for (int j = pos + 1; j < total; ++j) tuple[j] = 1;
    }
    return interaction_prefactor(n, m) * sum.value();
}

std::optional<int> first_nonvanishing_order(const ChargeDensity& rho, double tol) {
    double abs_weight = 0.0;
    for (double w : rho.weights) abs_weight += std::abs(w);
    if (std::abs(total_charge(rho)) > tol * std::max(1.0, abs_weight))
        throw DomainError("first_nonvanishing_order: density is not neutral");
    const double scale = rho.max_radius();
    for (int n = 1; n <= 4; ++n)
        if (multipole_moment(rho, n).max_abs() > tol * std::pow(scale, n)) return n;
    return std::nullopt;
}

ChargeDensity unit_moment_density(int order) {
    using V = Eigen::Vector3d;
    switch (order) {
    case 1:
        return ChargeDensity({V(0.5, 0, 0), V(-0.5, 0, 0)}, {1.0, -1.0}, "unit-dipole");
    case 2: {
        // +1 at +-e3, -1 at +-e3/2; leading entry M(3,3) = 1.5, rescaled to 1.
        const double s = 1.0 / 1.5;
        return ChargeDensity({V(0, 0, 1), V(0, 0, -1), V(0, 0, 0.5), V(0, 0, -0.5)},
                             {s, s, -s, -s}, "unit-quadrupole");
    }
    case 3: {
        // Alternating cube corners: weight = product of coordinate signs.
        std::vector<V> pts;
        std::vector<double> ws;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1}) {
                    pts.emplace_back(0.5 * sx, 0.5 * sy, 0.5 * sz);
                    ws.push_back(static_cast<double>(sx * sy * sz));
                }
        ChargeDensity raw(pts, ws, "unit-octopole");
        const double peak = multipole_moment(raw, 3).max_abs();
        for (double& w : ws) w /= peak;
        return ChargeDensity(std::move(pts), std::move(ws), "unit-octopole");
    }
    default:
        throw DomainError("unit_moment_density: order must be 1, 2 or 3");
    }
}

ChargeDensity degenerate_octopole_density() {
    std::vector<Eigen::Vector3d> pts;
    std::vector<double> ws;
    for (int k = 0; k < 6; ++k) {
        const double phi = k * M_PI / 3.0;
        pts.emplace_back(std::cos(phi), std::sin(phi), 0.0);
        ws.push_back(k % 2 == 0 ? 1.0 : -1.0);
    }
    return ChargeDensity(std::move(pts), std::move(ws), "planar-hexapole");
}

double octopole_contraction_min_singular_value(const MultipoleTensor& m3) {
    if (m3.order() != 3) throw DomainError("octopole contraction: tensor must have order 3");
    Eigen::MatrixXd contraction(6, 3);
    int row = 0;
    for (const auto& jk : sorted_indices(2)) {
        for (int i = 1; i <= 3; ++i)
            contraction(row, i - 1) = m3.entry({i, jk[0], jk[1]});
        ++row;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(contraction);
    return svd.singularValues().tail(1)(0);
}

} // namespace dispersia
