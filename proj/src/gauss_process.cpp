#include "latgas/gauss_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace latgas {

ProcessSpec::ProcessSpec(double sigma_, double gamma_) : sigma(sigma_), gamma(gamma_) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be finite and >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma must be finite and >= 0");
}

bool ProcessSpec::zero_reversion(double horizon) const noexcept {
    return gamma * horizon < kZeroReversionThreshold;
}

TenorGrid::TenorGrid(std::size_t periods, double tau) : periods_(periods), tau_(tau) {
    if (periods == 0) throw std::invalid_argument("tenor grid needs at least one period");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be > 0");
}

std::vector<double> TenorGrid::times() const {
    std::vector<double> t(periods_ + 1);
    for (std::size_t i = 0; i <= periods_; ++i) t[i] = time(i);
    return t;
}

double variance_G(const ProcessSpec& spec, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("variance_G: negative time");
    const double s2 = spec.sigma * spec.sigma;
    if (spec.zero_reversion(t)) return s2 * t;
    return -s2 / (2.0 * spec.gamma) * std::expm1(-2.0 * spec.gamma * t);
}

double covariance_X(const ProcessSpec& spec, double t1, double t2) {
    if (!(t1 >= 0.0) || !(t2 >= 0.0)) throw std::invalid_argument("covariance_X: negative time");
    // exp(-gamma |t1 - t2|) * G(min(t1, t2)), which avoids the cancellation in the
    // difference of exponentials.
    const double lo = std::min(t1, t2);
    const double hi = std::max(t1, t2);
    const double g = variance_G(spec, lo);
    if (spec.zero_reversion(hi)) return g;
    return std::exp(-spec.gamma * (hi - lo)) * g;
}

double decay_weight(const ProcessSpec& spec, double tau, long steps) {
    if (steps < 0) throw std::invalid_argument("decay_weight: negative step count");
    if (spec.gamma == 0.0 || steps == 0) return 1.0;
    return std::exp(-spec.gamma * tau * static_cast<double>(steps));
}

std::vector<double> dates_after(const TenorGrid& grid, double condition_time) {
    std::vector<double> out;
    for (std::size_t k = 0; k <= grid.periods(); ++k) {
        const double t = grid.time(k);
        if (t > condition_time) out.push_back(t);
    }
    return out;
}

double gaussian_moment_identity(const ProcessSpec& spec, const TenorGrid& grid,
                                std::span<const int> occupations, double condition_time,
                                double condition_state) {
    if (!(condition_time >= 0.0))
        throw std::invalid_argument("gaussian_moment_identity: negative condition time");
    const auto dates = dates_after(grid, condition_time);
    if (occupations.size() != dates.size())
        throw std::invalid_argument("gaussian_moment_identity: expected " +
                                    std::to_string(dates.size()) + " occupation entries, got " +
                                    std::to_string(occupations.size()));
    for (int n : occupations)
        if (n != 0 && n != 1)
            throw std::invalid_argument("gaussian_moment_identity: occupations must be 0 or 1");

    double drift = 0.0;
    for (std::size_t k = 0; k < dates.size(); ++k) {
        if (occupations[k] == 0) continue;
        drift += std::exp(-spec.gamma * (dates[k] - condition_time));
    }
    double pairs = 0.0;
    for (std::size_t j = 0; j < dates.size(); ++j) {
        if (occupations[j] == 0) continue;
        for (std::size_t k = j + 1; k < dates.size(); ++k)
            if (occupations[k] != 0) pairs += covariance_X(spec, dates[j], dates[k]);
    }
    const double g_t = variance_G(spec, condition_time);
    return condition_state * drift - 0.5 * g_t * drift * drift + pairs;
}

}  // namespace latgas
