#include "dispersia/rotations.hpp"

namespace dispersia {

void Rotation::validate(const Eigen::Matrix3d& m) {
    const Eigen::Matrix3d gram = m.transpose() * m - Eigen::Matrix3d::Identity();
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("rotation matrix fails orthonormality check");
    if (std::abs(m.determinant() - 1.0) > 1e-10)
        throw ValidationError("rotation matrix determinant is not 1");
}

void Generator::validate(const Eigen::Matrix3d& m) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (m(i, j) != -m(j, i))
                throw ValidationError("generator matrix is not exactly antisymmetric");
            if (std::abs(m(i, j)) > 1.0)
                throw ValidationError("generator entry exceeds the unit box");
        }
}

Generator Generator::axis(int i) {
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    if (i < 0 || i > 2) throw DomainError("Generator::axis: index must be 0, 1 or 2");
    w(i) = 1.0;
    return from_axis_vector(w);
}

Generator Generator::from_axis_vector(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
        -w.y(), w.x(), 0.0;
    return Generator(m);
}

Eigen::Matrix3d rodrigues(const Eigen::Matrix3d& skew) {
    const Eigen::Vector3d w(skew(2, 1), skew(0, 2), skew(1, 0));
    const double theta = w.norm();
    double a, b; // sin(t)/t and (1-cos(t))/t^2
    if (theta < 1e-6) {
        const double t2 = theta * theta;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return Eigen::Matrix3d::Identity() + a * skew + b * (skew * skew);
}

Rotation exp_map(const Generator& A, double t) {
    if (t == 0.0) return Rotation::identity();
    return Rotation(rodrigues(Eigen::Matrix3d(t * A.matrix())));
}

Eigen::Matrix3d so3_log(const Eigen::Matrix3d& R) {
    const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::acos(c);
    const Eigen::Matrix3d skew_part = 0.5 * (R - R.transpose());
    if (theta < 1e-8) return skew_part; // log(R) = skew + O(theta^3)
    if (theta > M_PI - 1e-6)
        throw DomainError("so3_log: rotation angle too close to pi, log branch ambiguous");
    return (theta / std::sin(theta)) * skew_part;
}

double rotation_distance(const Rotation& a, const Rotation& b) {
    const double c = std::clamp(((a.matrix().transpose() * b.matrix()).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

Rotation geodesic_interpolate(const Rotation& a, const Rotation& b, double s) {
    if (s == 0.0) return a;
    if (s == 1.0) return b;
    const Eigen::Matrix3d rel = so3_log(Eigen::Matrix3d(b.matrix() * a.matrix().transpose()));
    return Rotation(rodrigues(Eigen::Matrix3d(s * rel)) * a.matrix());
}

std::vector<GeneratorPair> generator_basis() {
    std::vector<GeneratorPair> basis;
    basis.reserve(6);
    for (int i = 0; i < 3; ++i) basis.push_back({Generator::axis(i), Generator::zero()});
    for (int i = 0; i < 3; ++i) basis.push_back({Generator::zero(), Generator::axis(i)});
    return basis;
}

std::vector<GeneratorPair> random_generator_pairs(int k, SplitRng rng) {
    std::vector<GeneratorPair> pairs;
    pairs.reserve(k);
    for (int i = 0; i < k; ++i) {
        Eigen::Vector3d a, b;
        for (int j = 0; j < 3; ++j) a(j) = rng.uniform(-1.0, 1.0);
        for (int j = 0; j < 3; ++j) b(j) = rng.uniform(-1.0, 1.0);
        pairs.push_back({Generator::from_axis_vector(a), Generator::from_axis_vector(b)});
    }
    return pairs;
}

Eigen::Matrix3d quaternion_to_matrix(double w, double x, double y, double z) {
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
}

Eigen::Vector4d matrix_to_quaternion(const Eigen::Matrix3d& m) {
    Eigen::Vector4d q; // (w, x, y, z)
    const double tr = m.trace();
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q << 0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
        q << (m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
        q << (m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
        q << (m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s;
    }
    return q / q.norm();
}

static Eigen::Matrix3d haar_rotation(SplitRng& rng) {
    double q[4];
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& c : q) {
            c = rng.normal();
            norm2 += c * c;
        }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    return quaternion_to_matrix(q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv);
}

std::vector<std::pair<Rotation, Rotation>> sample_so3_pairs(int n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_so3_pairs: n must be >= 1");
    std::vector<std::pair<Rotation, Rotation>> out;
    out.reserve(n);
    SplitRng rng(seed, 0x50334f33ULL);
    for (int i = 0; i < n; ++i) {
        const Eigen::Matrix3d u = haar_rotation(rng);
        const Eigen::Matrix3d v = haar_rotation(rng);
        out.emplace_back(Rotation(u), Rotation(v));
    }
    return out;
}

} // namespace dispersia
