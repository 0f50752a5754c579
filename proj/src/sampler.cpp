#include "latgas/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "latgas/parallel.hpp"
#include "latgas/quadrature.hpp"

namespace latgas {

namespace {
constexpr std::size_t kFieldRefreshSweeps = 64;
constexpr double kRhatLimit = 1.1;
constexpr std::size_t kBatches = 20;
}  // namespace

void ChainConfig::validate() const {
    if (samples < 100) throw std::invalid_argument("chain config: samples must be >= 100");
    if (chains < 2) throw std::invalid_argument("chain config: at least 2 chains are required");
    if (thinning < 1) throw std::invalid_argument("chain config: thinning must be >= 1");
}

CouplingPath CouplingPath::gauss_legendre(std::size_t nodes) {
    auto rule = latgas::gauss_legendre(nodes, 0.0, 1.0);
    return CouplingPath{std::move(rule.nodes), std::move(rule.weights)};
}

// ---------------------------------------------------------------------------

MetropolisChain::MetropolisChain(const GasSubsystem& sub, double phi, Occupation start)
    : sub_(&sub), site_(sub.site_terms(phi)), occ_(std::move(start)), field_(sub.size(), 0.0) {
    if (occ_.size() != sub.size()) throw std::invalid_argument("MetropolisChain: state size mismatch");
    refresh_fields();
}

void MetropolisChain::refresh_fields() noexcept {
    const std::size_t m = sub_->size();
    for (std::size_t j = 0; j < m; ++j) {
        double f = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            if (k != j && occ_[k]) f += sub_->coupling(j, k);
        field_[j] = f;
    }
}

double MetropolisChain::flip_log_ratio(std::size_t j) const noexcept {
    const double gain = site_[j] + field_[j];
    return occ_[j] ? -gain : gain;
}

void MetropolisChain::flip(std::size_t j) noexcept {
    const bool on = !occ_[j];
    occ_.flip(j);
    const std::size_t m = sub_->size();
    for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        const double c = sub_->coupling(k, j);
        field_[k] += on ? c : -c;
    }
}

void MetropolisChain::sweep(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t j = 0; j < sub_->size(); ++j) {
        const double r = flip_log_ratio(j);
        ++proposed_;
        if (r >= 0.0 || unif(rng) < std::exp(r)) {
            flip(j);
            ++accepted_;
        }
    }
    if (++sweeps_since_refresh_ >= kFieldRefreshSweeps) {
        refresh_fields();
        sweeps_since_refresh_ = 0;
    }
}

double MetropolisChain::log_weight() const {
    double e = 0.0;
    for (std::size_t j = 0; j < sub_->size(); ++j)
        if (occ_[j]) e += site_[j] + 0.5 * field_[j];
    return e;
}

void metropolis_sweep(const GasSubsystem& sub, double phi, Occupation& state, Rng& rng) {
    MetropolisChain chain(sub, phi, state);
    chain.sweep(rng);
    state = chain.occupation();
}

// ---------------------------------------------------------------------------

ChainSummary summarize_chains(const std::vector<std::vector<double>>& chains, std::size_t batches) {
    if (chains.empty()) throw std::invalid_argument("summarize_chains: no chains");
    const std::size_t len = chains.front().size();
    for (const auto& c : chains)
        if (c.size() != len) throw std::invalid_argument("summarize_chains: chains differ in length");
    if (len < 2 * batches) throw std::invalid_argument("summarize_chains: chains too short for batching");

    ChainSummary out;
    const std::size_t bsize = len / batches;
    std::vector<double> bmeans;
    bmeans.reserve(batches * chains.size());
    for (const auto& c : chains) {
        const std::size_t start = len - bsize * batches;
        for (std::size_t b = 0; b < batches; ++b) {
            double s = 0.0;
            for (std::size_t k = 0; k < bsize; ++k) s += c[start + b * bsize + k];
            bmeans.push_back(s / static_cast<double>(bsize));
        }
    }
    double mean = 0.0;
    for (double v : bmeans) mean += v;
    mean /= static_cast<double>(bmeans.size());
    double var = 0.0;
    for (double v : bmeans) var += (v - mean) * (v - mean);
    var /= static_cast<double>(bmeans.size() - 1);
    out.mean = mean;
    out.std_error = std::sqrt(var / static_cast<double>(bmeans.size()));

    // Split-chain R-hat.
    const std::size_t half = len / 2;
    std::vector<double> seq_mean, seq_var;
    for (const auto& c : chains) {
        for (std::size_t part = 0; part < 2; ++part) {
            const std::size_t off = len - 2 * half + part * half;
            double s = 0.0;
            for (std::size_t k = 0; k < half; ++k) s += c[off + k];
            const double mu = s / static_cast<double>(half);
            double v = 0.0;
            for (std::size_t k = 0; k < half; ++k) v += (c[off + k] - mu) * (c[off + k] - mu);
            seq_mean.push_back(mu);
            seq_var.push_back(v / static_cast<double>(half - 1));
        }
    }
    const double nseq = static_cast<double>(seq_mean.size());
    double grand = 0.0, within = 0.0;
    for (std::size_t s = 0; s < seq_mean.size(); ++s) {
        grand += seq_mean[s];
        within += seq_var[s];
    }
    grand /= nseq;
    within /= nseq;
    double between = 0.0;
    for (double mu : seq_mean) between += (mu - grand) * (mu - grand);
    between *= static_cast<double>(half) / (nseq - 1.0);
    if (within <= 0.0) {
        out.rhat = between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    } else {
        const double h = static_cast<double>(half);
        const double pooled = (h - 1.0) / h * within + between / h;
        out.rhat = std::sqrt(pooled / within);
    }
    return out;
}

namespace {

Occupation initial_state(std::size_t m, std::size_t chain) {
    // Alternate empty and full starting states so that R-hat sees both phases.
    Occupation occ(m);
    if (chain % 2 == 1)
        for (std::size_t j = 0; j < m; ++j) occ.set(j, true);
    return occ;
}

// Runs one chain and records f(chain) after every `thinning` sweeps.
template <class Observe>
void run_chain(const GasSubsystem& sub, double phi, const ChainConfig& cfg, std::size_t chain_index,
               std::uint64_t seed, Observe&& observe) {
    MetropolisChain chain(sub, phi, initial_state(sub.size(), chain_index));
    Rng rng(seed);
    for (std::size_t s = 0; s < cfg.burn_in; ++s) chain.sweep(rng);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        for (std::size_t t = 0; t < cfg.thinning; ++t) chain.sweep(rng);
        observe(chain, s);
    }
}

}  // namespace

PartitionValue estimate_lnZ_thermodynamic(const GasSubsystem& sub, double phi, const CouplingPath& path,
                                          const ChainConfig& cfg) {
    cfg.validate();
    if (path.lambdas.size() != path.weights.size() || path.lambdas.empty())
        throw std::invalid_argument("estimate_lnZ_thermodynamic: malformed coupling path");

    const std::size_t m = sub.size();
    double log_z0 = 0.0;
    for (double lf : sub.log_fugacity()) log_z0 += std::log1p(std::exp(lf));
    if (m == 0) return PartitionValue::exact(0.0);

    const std::size_t nodes = path.lambdas.size();
    const double g = sub.anchor_variance();
    const auto w = sub.decay_profile();

    // traces[node][chain][sample] of dE/dlambda at full coupling.
    std::vector<std::vector<std::vector<double>>> traces(
        nodes, std::vector<std::vector<double>>(cfg.chains, std::vector<double>(cfg.samples)));
    std::vector<GasSubsystem> scaled;
    scaled.reserve(nodes);
    for (double lambda : path.lambdas) scaled.push_back(sub.scaled(lambda));

    parallel_for(nodes * cfg.chains, [&](std::size_t task) {
        const std::size_t node = task / cfg.chains;
        const std::size_t c = task % cfg.chains;
        const double lambda = path.lambdas[node];
        auto& out = traces[node][c];
        run_chain(scaled[node], phi, cfg, c, derive_seed(cfg.seed, node, c),
                  [&](const MetropolisChain& chain, std::size_t s) {
                      double drift = 0.0, pair = 0.0;
                      for (std::size_t j = 0; j < m; ++j) {
                          if (!chain.occupation()[j]) continue;
                          drift += w[j];
                          pair += chain.field(j);
                      }
                      out[s] = phi * g * drift + 0.5 * pair / lambda;
                  });
    });

    double integral = 0.0, var = 0.0, max_rhat = 1.0;
    for (std::size_t node = 0; node < nodes; ++node) {
        const auto summary = summarize_chains(traces[node], std::min(kBatches, cfg.samples / 2));
        integral += path.weights[node] * summary.mean;
        var += path.weights[node] * path.weights[node] * summary.std_error * summary.std_error;
        max_rhat = std::max(max_rhat, summary.rhat);
    }
    PartitionValue out;
    out.log_value = log_z0 + integral;
    out.method = Method::sampled;
    out.std_error = std::sqrt(var);
    out.reliable = !(max_rhat > kRhatLimit);
    return out;
}

OccupancyEstimate estimate_occupancy(const GasSubsystem& sub, double phi, const ChainConfig& cfg) {
    cfg.validate();
    const std::size_t m = sub.size();
    OccupancyEstimate est;
    if (m == 0) return est;

    std::vector<std::vector<std::vector<double>>> traces(
        m, std::vector<std::vector<double>>(cfg.chains, std::vector<double>(cfg.samples)));
    parallel_for(cfg.chains, [&](std::size_t c) {
        run_chain(sub, phi, cfg, c, derive_seed(cfg.seed, 0x6f6363ULL, c),
                  [&](const MetropolisChain& chain, std::size_t s) {
                      for (std::size_t j = 0; j < m; ++j) traces[j][c][s] = chain.occupation()[j] ? 1.0 : 0.0;
                  });
    });
    est.mean.resize(m);
    est.std_error.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto summary = summarize_chains(traces[j], std::min(kBatches, cfg.samples / 2));
        est.mean[j] = summary.mean;
        est.std_error[j] = summary.std_error;
        est.max_rhat = std::max(est.max_rhat, summary.rhat);
    }
    est.reliable = !(est.max_rhat > kRhatLimit);
    return est;
}

}  // namespace latgas
