#pragma once

namespace dispersia {

/// Kahan compensated accumulator. Summation order is the caller's
/// responsibility; all library loops add in fixed index order so that
/// results are bit-reproducible.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace dispersia
