#include "latgas/calibration.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "latgas/parallel.hpp"

namespace latgas {

// ---------------------------------------------------------------------------
// YieldCurve

YieldCurve::YieldCurve(std::vector<double> discounts, double tau) : discounts_(std::move(discounts)), tau_(tau) {
    if (discounts_.size() < 2) throw std::invalid_argument("yield curve needs at least two discount factors");
    if (!(tau_ > 0.0)) throw std::invalid_argument("yield curve: tau must be > 0");
    if (std::abs(discounts_.front() - 1.0) > 1e-12)
        throw std::invalid_argument("yield curve: P(0,0) must equal 1");
    for (std::size_t i = 1; i < discounts_.size(); ++i) {
        if (!(discounts_[i] > 0.0) || !std::isfinite(discounts_[i]))
            throw std::invalid_argument("yield curve: discount " + std::to_string(i) + " must be positive");
        if (!(discounts_[i] < discounts_[i - 1]))
            throw std::invalid_argument("yield curve: discounts must be strictly decreasing (forward " +
                                        std::to_string(i - 1) + " is not positive)");
    }
}

YieldCurve YieldCurve::flat_forward(double forward, const TenorGrid& grid) {
    if (!(forward > 0.0)) throw std::invalid_argument("flat forward must be > 0");
    std::vector<double> p(grid.periods() + 1);
    const double step = 1.0 + forward * grid.tau();
    for (std::size_t i = 0; i <= grid.periods(); ++i) p[i] = std::pow(step, -static_cast<double>(i));
    return YieldCurve(std::move(p), grid.tau());
}

YieldCurve YieldCurve::from_forwards(std::span<const double> forwards, double tau) {
    std::vector<double> p(forwards.size() + 1, 1.0);
    for (std::size_t i = 0; i < forwards.size(); ++i) p[i + 1] = p[i] / (1.0 + forwards[i] * tau);
    return YieldCurve(std::move(p), tau);
}

double YieldCurve::forward(std::size_t i) const {
    if (i >= periods()) throw std::out_of_range("YieldCurve::forward: index out of range");
    return (discounts_[i] / discounts_[i + 1] - 1.0) / tau_;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

double exact_log_N(std::span<const double> libor_adj, const TenorGrid& grid, const ProcessSpec& spec,
                   std::size_t anchor, double phi, std::size_t cap) {
    if (spec.zero_reversion(grid.horizon()))
        return bdt_coefficients(libor_adj, grid, spec, anchor).log_N(phi);
    return enumerate_log_partition(build_subsystem(libor_adj, grid, spec, anchor), phi, cap).log_value;
}

void require_subsystem_calibrated(const CalibratedModel& model, std::size_t anchor) {
    if (anchor >= model.grid.periods()) throw std::invalid_argument("anchor index must be < n");
    if (anchor + 1 < model.lowest_index)
        throw std::invalid_argument("subsystem " + std::to_string(anchor) +
                                    " needs Libors below the calibrated range (lowest index " +
                                    std::to_string(model.lowest_index) + ")");
}

}  // namespace

CalibratedModel calibrate(const TenorGrid& grid, const ProcessSpec& spec, const YieldCurve& curve,
                          const EngineConfig& engine, std::size_t lowest_index) {
    const std::size_t n = grid.periods();
    if (curve.periods() != n) throw std::invalid_argument("calibrate: curve and grid have different lengths");
    if (std::abs(curve.tau() - grid.tau()) > 1e-14 * grid.tau())
        throw std::invalid_argument("calibrate: curve and grid have different accrual");
    if (lowest_index >= n) throw std::invalid_argument("calibrate: lowest index must be < n");

    CalibratedModel model{grid, spec, curve, engine, lowest_index,
                          std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()),
                          std::vector<double>(n, std::numeric_limits<double>::quiet_NaN())};

    for (std::size_t i = n; i-- > lowest_index;) {
        double log_n1 = 0.0;
        try {
            log_n1 = exact_log_N(model.libor_adj, grid, spec, i, 1.0, engine.enumeration_cap);
        } catch (const EnumerationCapExceeded& e) {
            throw CalibrationError(i, e.what());
        }
        if (!std::isfinite(log_n1)) throw CalibrationError(i, "N_i(1) is not finite");
        const double log_l = std::log(curve.discount_hat(i + 1)) + std::log(curve.forward(i)) - log_n1;
        const double l = std::exp(log_l);
        if (!(l > 0.0) || !std::isfinite(l))
            throw CalibrationError(i, "convexity-adjusted Libor out of range (ln L~ = " + std::to_string(log_l) + ")");
        model.libor_adj[i] = l;
        model.log_N1[i] = log_n1;
    }
    return model;
}

GasSubsystem build_subsystem(const CalibratedModel& model, std::size_t anchor) {
    require_subsystem_calibrated(model, anchor);
    return build_subsystem(model.libor_adj, model.grid, model.spec, anchor);
}

PartitionValue exact_convexity_expectation_N(const CalibratedModel& model, std::size_t anchor, double phi) {
    require_subsystem_calibrated(model, anchor);
    return PartitionValue::exact(
        exact_log_N(model.libor_adj, model.grid, model.spec, anchor, phi, model.engine.enumeration_cap));
}

PartitionValue convexity_expectation_N(const CalibratedModel& model, std::size_t anchor, double phi) {
    if (model.engine.method == Method::exact) return exact_convexity_expectation_N(model, anchor, phi);
    const auto sub = build_subsystem(model, anchor);
    return estimate_lnZ_thermodynamic(sub, phi, CouplingPath::gauss_legendre(model.engine.path_nodes),
                                      model.engine.chain);
}

std::vector<double> curve_residuals(const CalibratedModel& model) {
    std::vector<double> out;
    const std::size_t n = model.grid.periods();
    const std::size_t first = model.lowest_index == 0 ? 0 : model.lowest_index - 1;
    for (std::size_t i = first; i < n; ++i) {
        const double log_n0 = exact_convexity_expectation_N(model, i, 0.0).log_value;
        out.push_back(std::abs(std::expm1(log_n0 - std::log(model.curve.discount_hat(i + 1)))));
    }
    return out;
}

double libor_moment(const CalibratedModel& model, std::size_t i, int j) {
    if (j < 1) throw std::invalid_argument("libor_moment: order must be >= 1");
    if (!model.calibrated(i)) throw std::invalid_argument("libor_moment: index " + std::to_string(i) + " not calibrated");
    const double jj = static_cast<double>(j);
    const double g = variance_G(model.spec, model.grid.time(i));
    const double log_n = exact_convexity_expectation_N(model, i, jj).log_value;
    const double log_m = jj * std::log(model.libor_adj[i]) - 0.5 * (jj - jj * jj) * g + log_n -
                         std::log(model.curve.discount_hat(i + 1));
    if (!(log_m < std::log(std::numeric_limits<double>::max())))
        throw OverflowError("libor_moment: moment " + std::to_string(j) + " of L_" + std::to_string(i) +
                            " overflows (ln = " + std::to_string(log_m) + ")");
    return std::exp(log_m);
}

double atm_lognormal_vol(const CalibratedModel& model, std::size_t i) {
    if (i == 0 || i > model.grid.periods()) throw std::invalid_argument("atm_lognormal_vol: need 0 < i <= n");
    const double t = model.grid.time(i);
    return std::sqrt(variance_G(model.spec, t) / t);
}

double linearized_N(const YieldCurve& curve, const TenorGrid& grid, const ProcessSpec& spec, std::size_t anchor,
                    double phi) {
    const std::size_t n = grid.periods();
    if (anchor >= n) throw std::invalid_argument("linearized_N: anchor index must be < n");
    const double g = variance_G(spec, grid.time(anchor));
    double total = 1.0;
    for (std::size_t j = anchor + 1; j < n; ++j)
        total += curve.forward(j) * grid.tau() *
                 std::exp(phi * decay_weight(spec, grid.tau(), static_cast<long>(j - anchor)) * g);
    return total;
}

double linearized_N(const CalibratedModel& model, std::size_t anchor, double phi) {
    return linearized_N(model.curve, model.grid, model.spec, anchor, phi);
}

// ---------------------------------------------------------------------------
// Transition detection

CriticalVolatility critical_volatility(std::span<const double> sigma_grid, std::span<const double> log_N) {
    const std::size_t n = sigma_grid.size();
    if (log_N.size() != n) throw std::invalid_argument("critical_volatility: grid and values differ in length");
    if (n < 20) throw std::invalid_argument("critical_volatility: need at least 20 grid points");
    const double h = (sigma_grid.back() - sigma_grid.front()) / static_cast<double>(n - 1);
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs(sigma_grid[k] - sigma_grid[k - 1] - h) > 1e-9 * std::max(1.0, h))
            throw std::invalid_argument("critical_volatility: sigma grid must be uniform");
    if (!(h > 0.0)) throw std::invalid_argument("critical_volatility: sigma grid must be increasing");

    double scale = 0.0;
    for (double v : log_N) {
        if (!std::isfinite(v)) throw std::invalid_argument("critical_volatility: non-finite ln N value");
        scale = std::max(scale, std::abs(v));
    }
    std::vector<double> d2(n, -std::numeric_limits<double>::infinity());
    std::size_t best = 1;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        d2[k] = log_N[k + 1] - 2.0 * log_N[k] + log_N[k - 1];
        if (d2[k] > d2[best]) best = k;
    }
    const double noise = 1e-12 * std::max(1.0, scale);
    const bool interior = best > 1 && best + 2 < n;
    if (!(d2[best] > noise) || !interior || !(d2[best] > d2[best - 1]) || !(d2[best] > d2[best + 1]))
        throw NoTransitionDetected();
    return CriticalVolatility{sigma_grid[best], h, best};
}

CriticalVolatility critical_volatility(const std::function<double(double)>& log_N_of_sigma,
                                       std::span<const double> sigma_grid) {
    std::vector<double> values(sigma_grid.size());
    for (std::size_t k = 0; k < sigma_grid.size(); ++k) values[k] = log_N_of_sigma(sigma_grid[k]);
    return critical_volatility(sigma_grid, values);
}

std::vector<double> scan_log_N(const TenorGrid& grid, const YieldCurve& curve, double gamma, std::size_t anchor,
                               std::span<const double> sigma_grid, double phi, const EngineConfig& engine) {
    std::vector<double> out(sigma_grid.size());
    parallel_for(sigma_grid.size(), [&](std::size_t k) {
        const auto model = calibrate(grid, ProcessSpec(sigma_grid[k], gamma), curve, engine, anchor);
        out[k] = convexity_expectation_N(model, anchor, phi).log_value;
    });
    return out;
}

}  // namespace latgas
