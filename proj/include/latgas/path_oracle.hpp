#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "latgas/calibration.hpp"

namespace latgas {

// Brute-force checks of the lattice-gas formulas by direct simulation of the
// driver. Nothing here uses the enumeration or coefficient code.

/// Paths of x(t) at the grid dates t_0..t_n, row-major (count x (n+1)).
struct PathBatch {
    std::size_t count = 0;
    std::vector<double> times;
    std::vector<double> values;
    std::uint64_t seed = 0;

    std::size_t dates() const noexcept { return times.size(); }
    double at(std::size_t path, std::size_t k) const noexcept { return values[path * dates() + k]; }
};

/// Exact AR(1) transition sampling x_{k+1} = w x_k + sqrt(G(tau)) Z. With a
/// truncation multiple c, each value is clipped to |x(t)| <= c sigma sqrt(t) and
/// the clipped value is propagated, as on a bounded finite-difference grid.
PathBatch simulate_paths(const ProcessSpec& spec, const TenorGrid& grid, std::size_t count, std::uint64_t seed,
                         std::optional<double> truncation = std::nullopt);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and variance of exp(F_k) accumulated from log-values F_k without
/// overflow. Mergeable, so blocks can be reduced in a fixed order.
class LogScaleMoments {
public:
    void add(double log_value) noexcept;
    void merge(const LogScaleMoments& other) noexcept;

    double count() const noexcept { return count_; }
    /// ln of the sample mean.
    double log_mean() const noexcept;
    /// Standard error of the mean divided by the mean (= standard error of ln mean).
    double relative_std_error() const noexcept;
    McEstimate estimate() const noexcept;

private:
    void rescale(double new_shift) noexcept;

    double shift_ = 0.0;  // values are stored as exp(F - shift_)
    double count_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    bool empty_ = true;
};

/// P^_{i,i+1}(x_i) = E[ prod_{k>i} (1 + L~_k tau exp(x_k - G_k / 2)) | x(t_i) = x_i ],
/// by forward simulation restarted at (t_i, x_i).
McEstimate mc_bond_value(const CalibratedModel& model, std::size_t anchor, double x_i, std::size_t count,
                         std::uint64_t seed);

/// N_i(phi) = E[ prod_{k>i} (1 + L~_k tau exp(x_k - G_k / 2)) exp(phi x_i - phi^2 G_i / 2) ]
/// on simulated paths, returned in log form.
///
/// Without truncation the paths are drawn from an equal-weight mixture of
/// mean-shifted Gaussians (shifts at the stationary points of the integrand times
/// the path density, plus the unshifted law) and reweighted by the exact
/// likelihood ratio. With truncation plain paths are clipped as in simulate_paths.
PartitionValue mc_convexity_N(const CalibratedModel& model, std::size_t anchor, double phi, std::size_t count,
                              std::uint64_t seed, std::optional<double> truncation = std::nullopt);

/// ln E[ exp( sum_k n_k (x_k - G_k / 2) ) | x(t) = x_t ] by forward simulation
/// from (condition_time, condition_state); occupations are indexed as in
/// gaussian_moment_identity.
PartitionValue mc_gaussian_moment(const ProcessSpec& spec, const TenorGrid& grid, std::span<const int> occupations,
                                  double condition_time, double condition_state, std::size_t count,
                                  std::uint64_t seed);

}  // namespace latgas
