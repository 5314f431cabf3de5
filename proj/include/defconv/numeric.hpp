#pragma once
// Compensated summation and small numeric helpers.

#include <cmath>
#include <span>

namespace defconv {

// Neumaier variant of Kahan summation; order-dependent but deterministic.
class KahanSum {
public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    KahanSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace defconv
