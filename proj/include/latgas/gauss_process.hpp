#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace latgas {

// Below this value of gamma * t_n all formulas use their exact gamma -> 0 limits.
inline constexpr double kZeroReversionThreshold = 1e-12;

/// Volatility and mean reversion of the Gaussian Markov driver
///     dx = -gamma x dt + sigma dW,   x(0) = 0.
///
/// Other Gaussian Markov drivers (x(t) = f(t) * int_0^t g dW) only change the
/// variance, covariance and decay functions below; everything downstream is
/// written in terms of those three.
struct ProcessSpec {
    double sigma = 0.0;
    double gamma = 0.0;

    ProcessSpec() = default;
    ProcessSpec(double sigma, double gamma);

    /// True when gamma * horizon is below kZeroReversionThreshold.
    bool zero_reversion(double horizon) const noexcept;
};

/// Uniform tenor grid t_i = i * tau, i = 0..n.
class TenorGrid {
public:
    TenorGrid(std::size_t periods, double tau);

    std::size_t periods() const noexcept { return periods_; }
    double tau() const noexcept { return tau_; }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) * tau_; }
    double horizon() const noexcept { return time(periods_); }
    std::vector<double> times() const;

private:
    std::size_t periods_;
    double tau_;
};

/// G(t) = sigma^2 / (2 gamma) * (1 - exp(-2 gamma t)), or sigma^2 t when gamma -> 0.
double variance_G(const ProcessSpec& spec, double t);

/// Cov(x(t1), x(t2)) = sigma^2 / (2 gamma) * (exp(-gamma |t1 - t2|) - exp(-gamma (t1 + t2))).
double covariance_X(const ProcessSpec& spec, double t1, double t2);

/// w^steps with w = exp(-gamma tau).
double decay_weight(const ProcessSpec& spec, double tau, long steps);

/// Conditional form of the Gaussian moment identity: returns
///     ln E[ exp( sum_k n_k (x_k - G_k / 2) ) | x(t) = x_t ]
///       = x_t S - G_t S^2 / 2 + sum_{j<k} X_jk n_j n_k,   S = sum_k n_k exp(-gamma (t_k - t)),
/// with X the unconditional covariance. `occupations[k]` refers to the k-th grid
/// date strictly after `condition_time`; entries must be 0 or 1.
double gaussian_moment_identity(const ProcessSpec& spec, const TenorGrid& grid,
                                std::span<const int> occupations, double condition_time,
                                double condition_state);

/// Grid dates strictly after `condition_time` (the dates `occupations` refers to).
std::vector<double> dates_after(const TenorGrid& grid, double condition_time);

}  // namespace latgas
