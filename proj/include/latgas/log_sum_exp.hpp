#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace latgas {

// Running log(sum exp(x_k)) with a rescaled partial sum, so that terms of any
// magnitude can be accumulated without overflow.
class LogSumExp {
public:
    void add(double x) noexcept {
        if (x == -std::numeric_limits<double>::infinity()) return;
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }

    // Merge another accumulator (used for deterministic tree reductions).
    void merge(const LogSumExp& other) noexcept {
        if (other.sum_ == 0.0) return;
        if (sum_ == 0.0) {
            *this = other;
        } else if (other.max_ <= max_) {
            sum_ += other.sum_ * std::exp(other.max_ - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
            max_ = other.max_;
        }
    }

    double value() const noexcept {
        if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(sum_);
    }

    double max() const noexcept { return max_; }
    double scaled_sum() const noexcept { return sum_; }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) noexcept {
    LogSumExp acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace latgas
