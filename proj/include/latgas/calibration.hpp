#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "latgas/errors.hpp"
#include "latgas/gauss_process.hpp"
#include "latgas/lattice_gas.hpp"
#include "latgas/sampler.hpp"

namespace latgas {

/// Initial discount curve P_{0,i}, i = 0..n, on a uniform grid.
class YieldCurve {
public:
    /// Discounts must start at 1 and be strictly decreasing (positive forwards).
    YieldCurve(std::vector<double> discounts, double tau);
    /// P_{0,i} = (1 + fwd tau)^{-i}.
    static YieldCurve flat_forward(double forward, const TenorGrid& grid);
    /// Discounts implied by simple forwards L_0..L_{n-1}.
    static YieldCurve from_forwards(std::span<const double> forwards, double tau);

    std::size_t periods() const noexcept { return discounts_.size() - 1; }
    double tau() const noexcept { return tau_; }
    double discount(std::size_t i) const { return discounts_.at(i); }
    /// P^_{0,i} = P_{0,i} / P_{0,n}.
    double discount_hat(std::size_t i) const { return discounts_.at(i) / discounts_.back(); }
    double forward(std::size_t i) const;
    std::span<const double> discounts() const noexcept { return discounts_; }

private:
    std::vector<double> discounts_;
    double tau_;
};

struct EngineConfig {
    Method method = Method::exact;
    std::size_t enumeration_cap = kDefaultEnumerationCap;
    ChainConfig chain{};
    std::size_t path_nodes = 16;

    bool operator==(const EngineConfig&) const = default;
};

/// Convexity-adjusted Libors L~_i calibrated to an initial curve.
/// Indices below lowest_index are not calibrated (NaN).
struct CalibratedModel {
    TenorGrid grid;
    ProcessSpec spec;
    YieldCurve curve;
    EngineConfig engine;
    std::size_t lowest_index = 0;
    std::vector<double> libor_adj;  ///< L~_i, i = 0..n-1
    std::vector<double> log_N1;     ///< ln N_i(1) used when solving for L~_i

    bool calibrated(std::size_t i) const noexcept { return i >= lowest_index && i < libor_adj.size(); }
};

/// Backward bootstrap L~_i = P^_{0,i+1} L_i^fwd / N_i(1) for i = n-1 down to
/// lowest_index. Zero mean reversion uses the O(m^2) coefficient recursion;
/// otherwise N_i(1) is enumerated (subject to engine.enumeration_cap).
/// Calibration is always exact; engine.method only affects later evaluations.
CalibratedModel calibrate(const TenorGrid& grid, const ProcessSpec& spec, const YieldCurve& curve,
                          const EngineConfig& engine = {}, std::size_t lowest_index = 0);

GasSubsystem build_subsystem(const CalibratedModel& model, std::size_t anchor);

/// ln N_i(phi) with the model's engine.
PartitionValue convexity_expectation_N(const CalibratedModel& model, std::size_t anchor, double phi);
/// ln N_i(phi) by exact evaluation regardless of the configured engine.
PartitionValue exact_convexity_expectation_N(const CalibratedModel& model, std::size_t anchor, double phi);

/// |N_i(0) / P^_{0,i+1} - 1| for every calibrated index (exact evaluation).
std::vector<double> curve_residuals(const CalibratedModel& model);

/// j-th moment of L_i in its own forward measure:
///     L~_i^j exp(-(j - j^2) G_i / 2) N_i(j) / P^_{0,i+1}.
double libor_moment(const CalibratedModel& model, std::size_t i, int j);

/// sigma_LN = sqrt(G(t_i) / t_i).
double atm_lognormal_vol(const CalibratedModel& model, std::size_t i);

/// First order expansion N_i(phi) ~ 1 + sum_{j>i} L_j^fwd tau exp(phi w^{j-i} G_i).
double linearized_N(const YieldCurve& curve, const TenorGrid& grid, const ProcessSpec& spec,
                    std::size_t anchor, double phi);
double linearized_N(const CalibratedModel& model, std::size_t anchor, double phi);

struct CriticalVolatility {
    double sigma = 0.0;
    double uncertainty = 0.0;  ///< grid spacing
    std::size_t grid_index = 0;
};

/// Locates the kink of ln N_i(1) as the interior grid point with the largest
/// second central difference. Throws NoTransitionDetected if that maximum is not
/// a strictly positive interior peak.
CriticalVolatility critical_volatility(std::span<const double> sigma_grid, std::span<const double> log_N);
CriticalVolatility critical_volatility(const std::function<double(double)>& log_N_of_sigma,
                                       std::span<const double> sigma_grid);

class NoTransitionDetected : public NumericalError {
public:
    NoTransitionDetected() : NumericalError("no transition detected on grid") {}
};

/// ln N_anchor(phi) along a sigma grid at fixed gamma, recalibrating each point
/// down to the anchor.
std::vector<double> scan_log_N(const TenorGrid& grid, const YieldCurve& curve, double gamma,
                               std::size_t anchor, std::span<const double> sigma_grid, double phi = 1.0,
                               const EngineConfig& engine = {});

}  // namespace latgas
