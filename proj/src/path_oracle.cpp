#include "latgas/path_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "latgas/parallel.hpp"
#include "latgas/random.hpp"

namespace latgas {

namespace {
constexpr std::size_t kPathsPerBlock = std::size_t{1} << 14;

std::size_t block_count(std::size_t count) { return (count + kPathsPerBlock - 1) / kPathsPerBlock; }

std::size_t block_size(std::size_t count, std::size_t block) {
    return std::min(kPathsPerBlock, count - block * kPathsPerBlock);
}

LogScaleMoments reduce(std::vector<LogScaleMoments>& parts) {
    LogScaleMoments total;
    for (const auto& p : parts) total.merge(p);
    return total;
}

double clip(double x, double cap) { return std::clamp(x, -cap, cap); }

}  // namespace

// ---------------------------------------------------------------------------
// LogScaleMoments

void LogScaleMoments::rescale(double new_shift) noexcept {
    const double f = std::exp(shift_ - new_shift);
    mean_ *= f;
    m2_ *= f * f;
    shift_ = new_shift;
}

void LogScaleMoments::add(double log_value) noexcept {
    if (empty_) {
        shift_ = log_value;
        empty_ = false;
    } else if (log_value > shift_) {
        rescale(log_value);
    }
    const double v = std::exp(log_value - shift_);
    count_ += 1.0;
    const double delta = v - mean_;
    mean_ += delta / count_;
    m2_ += delta * (v - mean_);
}

void LogScaleMoments::merge(const LogScaleMoments& other) noexcept {
    if (other.empty_) return;
    if (empty_) {
        *this = other;
        return;
    }
    LogScaleMoments b = other;
    if (b.shift_ > shift_)
        rescale(b.shift_);
    else
        b.rescale(shift_);
    const double n = count_ + b.count_;
    const double delta = b.mean_ - mean_;
    mean_ += delta * b.count_ / n;
    m2_ += b.m2_ + delta * delta * count_ * b.count_ / n;
    count_ = n;
}

double LogScaleMoments::log_mean() const noexcept {
    if (empty_ || mean_ <= 0.0) return -std::numeric_limits<double>::infinity();
    return shift_ + std::log(mean_);
}

double LogScaleMoments::relative_std_error() const noexcept {
    if (count_ < 2.0 || mean_ <= 0.0) return 0.0;
    const double var = std::max(0.0, m2_ / (count_ - 1.0));
    return std::sqrt(var / count_) / mean_;
}

McEstimate LogScaleMoments::estimate() const noexcept {
    const double mean = std::exp(log_mean());
    return McEstimate{mean, mean * relative_std_error()};
}

// ---------------------------------------------------------------------------
// Path simulation

PathBatch simulate_paths(const ProcessSpec& spec, const TenorGrid& grid, std::size_t count, std::uint64_t seed,
                         std::optional<double> truncation) {
    if (count == 0) throw std::invalid_argument("simulate_paths: count must be >= 1");
    if (truncation && !(*truncation > 0.0)) throw std::invalid_argument("simulate_paths: truncation must be > 0");

    PathBatch batch;
    batch.count = count;
    batch.times = grid.times();
    batch.seed = seed;
    const std::size_t dates = batch.times.size();
    batch.values.assign(count * dates, 0.0);

    const double w = decay_weight(spec, grid.tau(), 1);
    const double step_sd = std::sqrt(variance_G(spec, grid.tau()));
    parallel_for(block_count(count), [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::normal_distribution<double> normal;
        const std::size_t first = b * kPathsPerBlock;
        for (std::size_t p = first; p < first + block_size(count, b); ++p) {
            double x = 0.0;
            double* row = &batch.values[p * dates];
            for (std::size_t k = 1; k < dates; ++k) {
                x = w * x + step_sd * normal(rng);
                if (truncation) x = clip(x, *truncation * spec.sigma * std::sqrt(batch.times[k]));
                row[k] = x;
            }
        }
    });
    return batch;
}

// ---------------------------------------------------------------------------
// Bond and convexity estimators

namespace {

void require_libors(const CalibratedModel& model, std::size_t anchor) {
    if (anchor >= model.grid.periods()) throw std::invalid_argument("anchor index must be < n");
    for (std::size_t k = anchor + 1; k < model.grid.periods(); ++k)
        if (!(model.libor_adj[k] > 0.0))
            throw std::invalid_argument("path oracle: Libor " + std::to_string(k) + " is not calibrated");
}

// Per-date constants for the product prod_k (1 + a_k exp(x_k)), a_k = L~_k tau exp(-G_k / 2).
std::vector<double> log_payoff_scales(const CalibratedModel& model, std::size_t anchor) {
    std::vector<double> out;
    for (std::size_t k = anchor + 1; k < model.grid.periods(); ++k)
        out.push_back(std::log(model.libor_adj[k] * model.grid.tau()) -
                      0.5 * variance_G(model.spec, model.grid.time(k)));
    return out;
}

double log1p_exp(double z) { return z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Gaussian law of (x_i, ..., x_{n-1}) and the mixture of mean shifts used for
// importance sampling. Shift r has mean C y_r and likelihood ratio
// dQ_r/dP(x) = exp(y_r . x - y_r . C y_r / 2).
struct TiltMixture {
    std::vector<std::vector<double>> y;
    std::vector<std::vector<double>> mean;  // C y
    std::vector<double> half_norm;          // y . C y / 2
};

std::vector<double> times_from(const CalibratedModel& model, std::size_t anchor) {
    std::vector<double> t;
    for (std::size_t k = anchor; k < model.grid.periods(); ++k) t.push_back(model.grid.time(k));
    return t;
}

TiltMixture build_tilts(const CalibratedModel& model, std::size_t anchor, double phi,
                        const std::vector<double>& log_a) {
    const auto t = times_from(model, anchor);
    const std::size_t d = t.size();
    std::vector<double> cov(d * d);
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q) cov[p * d + q] = covariance_X(model.spec, t[p], t[q]);
    auto times_cov = [&](const std::vector<double>& y) {
        std::vector<double> x(d, 0.0);
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = 0; q < d; ++q) x[p] += cov[p * d + q] * y[q];
        return x;
    };

    // Stationary points of ln F(x) - x' C^{-1} x / 2 satisfy y = grad ln F(C y):
    // y_0 = phi, y_q = logistic(ln a_q + x_q). Damped iteration from several starts.
    std::vector<std::vector<double>> found;
    auto known = [&](const std::vector<double>& y) {
        for (const auto& f : found) {
            double diff = 0.0;
            for (std::size_t q = 0; q < d; ++q) diff = std::max(diff, std::abs(f[q] - y[q]));
            if (diff < 1e-6) return true;
        }
        return false;
    };
    for (int s = 0; s <= 10; ++s) {
        std::vector<double> y(d, 0.1 * s);
        y[0] = phi;
        for (int it = 0; it < 2000; ++it) {
            const auto x = times_cov(y);
            double diff = 0.0;
            for (std::size_t q = 1; q < d; ++q) {
                const double next = 0.5 * y[q] + 0.5 * logistic(log_a[q - 1] + x[q]);
                diff = std::max(diff, std::abs(next - y[q]));
                y[q] = next;
            }
            if (diff < 1e-12) break;
        }
        if (!known(y)) found.push_back(y);
    }
    std::vector<double> origin(d, 0.0);
    if (!known(origin)) found.push_back(origin);

    TiltMixture mix;
    mix.y = found;
    for (std::size_t a = 0; a < found.size(); ++a)
        for (std::size_t b = a + 1; b < found.size(); ++b) {
            std::vector<double> mid(d);
            for (std::size_t q = 0; q < d; ++q) mid[q] = 0.5 * (found[a][q] + found[b][q]);
            mix.y.push_back(std::move(mid));
        }
    for (const auto& y : mix.y) {
        auto x = times_cov(y);
        double h = 0.0;
        for (std::size_t q = 0; q < d; ++q) h += 0.5 * y[q] * x[q];
        mix.mean.push_back(std::move(x));
        mix.half_norm.push_back(h);
    }
    return mix;
}

}  // namespace

McEstimate mc_bond_value(const CalibratedModel& model, std::size_t anchor, double x_i, std::size_t count,
                         std::uint64_t seed) {
    require_libors(model, anchor);
    if (count == 0) throw std::invalid_argument("mc_bond_value: count must be >= 1");
    const auto log_a = log_payoff_scales(model, anchor);
    const double w = decay_weight(model.spec, model.grid.tau(), 1);
    const double step_sd = std::sqrt(variance_G(model.spec, model.grid.tau()));

    std::vector<LogScaleMoments> parts(block_count(count));
    parallel_for(parts.size(), [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::normal_distribution<double> normal;
        LogScaleMoments acc;
        for (std::size_t p = 0; p < block_size(count, b); ++p) {
            double x = x_i, log_v = 0.0;
            for (double la : log_a) {
                x = w * x + step_sd * normal(rng);
                log_v += log1p_exp(la + x);
            }
            acc.add(log_v);
        }
        parts[b] = acc;
    });
    return reduce(parts).estimate();
}

PartitionValue mc_convexity_N(const CalibratedModel& model, std::size_t anchor, double phi, std::size_t count,
                              std::uint64_t seed, std::optional<double> truncation) {
    require_libors(model, anchor);
    if (count == 0) throw std::invalid_argument("mc_convexity_N: count must be >= 1");
    if (truncation && !(*truncation > 0.0)) throw std::invalid_argument("mc_convexity_N: truncation must be > 0");

    const auto log_a = log_payoff_scales(model, anchor);
    const std::size_t d = log_a.size() + 1;
    const double g_i = variance_G(model.spec, model.grid.time(anchor));
    const double w = decay_weight(model.spec, model.grid.tau(), 1);
    const double step_sd = std::sqrt(variance_G(model.spec, model.grid.tau()));
    const double sigma = model.spec.sigma;

    TiltMixture mix;
    if (!truncation) mix = build_tilts(model, anchor, phi, log_a);
    const std::size_t comps = mix.y.size();
    const double log_comps = std::log(static_cast<double>(std::max<std::size_t>(comps, 1)));

    std::vector<LogScaleMoments> parts(block_count(count));
    parallel_for(parts.size(), [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<std::size_t> pick(0, comps == 0 ? 0 : comps - 1);
        std::vector<double> x(d);
        LogScaleMoments acc;
        for (std::size_t p = 0; p < block_size(count, b); ++p) {
            double log_ratio = 0.0;
            if (truncation) {
                double v = 0.0;
                for (std::size_t k = 1; k <= anchor; ++k) {
                    v = w * v + step_sd * normal(rng);
                    v = clip(v, *truncation * sigma * std::sqrt(model.grid.time(k)));
                }
                x[0] = v;
                for (std::size_t q = 1; q < d; ++q) {
                    v = w * v + step_sd * normal(rng);
                    x[q] = clip(v, *truncation * sigma * std::sqrt(model.grid.time(anchor + q)));
                }
            } else {
                const std::size_t r = pick(rng);
                double v = std::sqrt(g_i) * normal(rng);
                x[0] = v;
                for (std::size_t q = 1; q < d; ++q) {
                    v = w * v + step_sd * normal(rng);
                    x[q] = v;
                }
                for (std::size_t q = 0; q < d; ++q) x[q] += mix.mean[r][q];
                // ln of the mixture density ratio q(x)/p(x).
                double mx = -std::numeric_limits<double>::infinity();
                thread_local std::vector<double> e;
                e.assign(comps, 0.0);
                for (std::size_t c = 0; c < comps; ++c) {
                    double dot = 0.0;
                    for (std::size_t q = 0; q < d; ++q) dot += mix.y[c][q] * x[q];
                    e[c] = dot - mix.half_norm[c];
                    mx = std::max(mx, e[c]);
                }
                double s = 0.0;
                for (double ec : e) s += std::exp(ec - mx);
                log_ratio = mx + std::log(s) - log_comps;
            }
            double log_v = phi * x[0] - 0.5 * phi * phi * g_i - log_ratio;
            for (std::size_t q = 1; q < d; ++q) log_v += log1p_exp(log_a[q - 1] + x[q]);
            acc.add(log_v);
        }
        parts[b] = acc;
    });
    const auto total = reduce(parts);
    PartitionValue out;
    out.log_value = total.log_mean();
    out.method = Method::sampled;
    out.std_error = total.relative_std_error();
    return out;
}

PartitionValue mc_gaussian_moment(const ProcessSpec& spec, const TenorGrid& grid, std::span<const int> occupations,
                                  double condition_time, double condition_state, std::size_t count,
                                  std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("mc_gaussian_moment: count must be >= 1");
    const auto dates = dates_after(grid, condition_time);
    if (occupations.size() != dates.size())
        throw std::invalid_argument("mc_gaussian_moment: occupation vector does not match the dates");
    std::vector<double> decay(dates.size()), step_sd(dates.size()), half_g(dates.size());
    double prev = condition_time;
    for (std::size_t k = 0; k < dates.size(); ++k) {
        decay[k] = std::exp(-spec.gamma * (dates[k] - prev));
        step_sd[k] = std::sqrt(variance_G(spec, dates[k] - prev));
        half_g[k] = 0.5 * variance_G(spec, dates[k]);
        prev = dates[k];
    }

    std::vector<LogScaleMoments> parts(block_count(count));
    parallel_for(parts.size(), [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        std::normal_distribution<double> normal;
        LogScaleMoments acc;
        for (std::size_t p = 0; p < block_size(count, b); ++p) {
            double x = condition_state, log_v = 0.0;
            for (std::size_t k = 0; k < dates.size(); ++k) {
                x = decay[k] * x + step_sd[k] * normal(rng);
                if (occupations[k]) log_v += x - half_g[k];
            }
            acc.add(log_v);
        }
        parts[b] = acc;
    });
    const auto total = reduce(parts);
    return PartitionValue{total.log_mean(), Method::sampled, total.relative_std_error(), true};
}

}  // namespace latgas
