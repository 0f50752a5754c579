#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "latgas/lattice_gas.hpp"
#include "latgas/random.hpp"

namespace latgas {

struct ChainConfig {
    std::uint64_t seed = 1;
    std::size_t burn_in = 1000;  ///< sweeps discarded per chain
    std::size_t samples = 20000; ///< recorded samples per chain
    std::size_t thinning = 1;    ///< sweeps between recorded samples
    std::size_t chains = 4;

    void validate() const;
    bool operator==(const ChainConfig&) const = default;
};

/// Quadrature over the interaction strength lambda in [0, 1], where the gas at
/// lambda has sigma^2 replaced by lambda * sigma^2.
struct CouplingPath {
    std::vector<double> lambdas;
    std::vector<double> weights;

    static CouplingPath gauss_legendre(std::size_t nodes = 16);
};

/// Single-site flip Metropolis chain on a fixed subsystem and chemical potential.
/// Keeps the local fields sum_{k != j} X_jk n_k so that a proposal costs O(1).
class MetropolisChain {
public:
    MetropolisChain(const GasSubsystem& sub, double phi, Occupation start);

    /// Log of the weight ratio for flipping site j.
    double flip_log_ratio(std::size_t j) const noexcept;
    void flip(std::size_t j) noexcept;
    /// One sweep: every site proposed once, in order.
    void sweep(Rng& rng);

    const Occupation& occupation() const noexcept { return occ_; }
    double field(std::size_t j) const noexcept { return field_[j]; }
    double log_weight() const;
    std::uint64_t accepted() const noexcept { return accepted_; }
    std::uint64_t proposed() const noexcept { return proposed_; }

private:
    void refresh_fields() noexcept;

    const GasSubsystem* sub_;
    std::vector<double> site_;
    Occupation occ_;
    std::vector<double> field_;
    std::uint64_t accepted_ = 0;
    std::uint64_t proposed_ = 0;
    std::size_t sweeps_since_refresh_ = 0;
};

/// One Metropolis sweep of `state` (convenience wrapper around MetropolisChain).
void metropolis_sweep(const GasSubsystem& sub, double phi, Occupation& state, Rng& rng);

/// Thermodynamic integration estimate of ln Z:
///     ln Z(1) = sum_j ln(1 + L~_j tau) + int_0^1 < phi G_i sum_j n_j w^{j-i} + sum_{j<k} X_jk n_j n_k >_lambda dlambda.
/// std_error comes from batch means pooled across chains; `reliable` is false when
/// the split-chain R-hat of any node exceeds 1.1.
PartitionValue estimate_lnZ_thermodynamic(const GasSubsystem& sub, double phi, const CouplingPath& path,
                                          const ChainConfig& cfg);

struct OccupancyEstimate {
    std::vector<double> mean;
    std::vector<double> std_error;
    double max_rhat = 1.0;
    bool reliable = true;
};

OccupancyEstimate estimate_occupancy(const GasSubsystem& sub, double phi, const ChainConfig& cfg);

/// Mean and standard error by batch means over samples pooled from several chains,
/// plus the split-chain potential scale reduction factor.
struct ChainSummary {
    double mean = 0.0;
    double std_error = 0.0;
    double rhat = 1.0;
};

ChainSummary summarize_chains(const std::vector<std::vector<double>>& chains, std::size_t batches = 20);

}  // namespace latgas
