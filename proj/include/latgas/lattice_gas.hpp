#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latgas/gauss_process.hpp"

namespace latgas {

// Subsystems with more sites than this are refused by the exact enumerator.
inline constexpr std::size_t kDefaultEnumerationCap = 26;
// Hard limit: configurations are indexed by 64-bit integers.
inline constexpr std::size_t kMaxEnumerableSites = 40;

/// 0/1 occupation numbers over the sites of a subsystem.
class Occupation {
public:
    Occupation() = default;
    explicit Occupation(std::size_t sites) : n_(sites, 0) {}
    explicit Occupation(std::vector<std::uint8_t> n);

    static Occupation from_index(std::size_t sites, std::uint64_t index);
    std::uint64_t to_index() const;

    std::size_t size() const noexcept { return n_.size(); }
    bool operator[](std::size_t j) const noexcept { return n_[j] != 0; }
    void set(std::size_t j, bool occupied) noexcept { n_[j] = occupied ? 1 : 0; }
    void flip(std::size_t j) noexcept { n_[j] ^= 1; }
    std::size_t count() const noexcept;

    std::span<const std::uint8_t> raw() const noexcept { return n_; }
    bool operator==(const Occupation&) const = default;

private:
    std::vector<std::uint8_t> n_;
};

enum class Method { exact, sampled };

/// A partition sum (or any positive expectation) carried in log form.
struct PartitionValue {
    double log_value = 0.0;
    Method method = Method::exact;
    double std_error = 0.0;  ///< standard error of log_value; 0 for exact results
    bool reliable = true;  ///< false when sampler diagnostics flagged the estimate

    static PartitionValue exact(double log_value) { return {log_value, Method::exact, 0.0, true}; }
};

/// The gas on sites {i+1, ..., n-1} attached to anchor date i.
///
/// With beta fixed to 1, a configuration n has log-weight
///     sum_j n_j ln(L~_j tau) + sum_{j<k} X_jk n_j n_k + phi G_i sum_j n_j w^{j-i},
/// i.e. fugacities L~_j tau, attractive couplings X_jk = Cov(x_j, x_k) and the
/// position dependent chemical potential phi G_i w^{j-i}.
/// Sites are addressed by local index 0..size()-1 (tenor index anchor()+1+local).
class GasSubsystem {
public:
    GasSubsystem() = default;
    /// `coupling` is a row-major size x size matrix; the diagonal is ignored.
    GasSubsystem(std::size_t anchor, std::vector<double> log_fugacity, std::vector<double> coupling,
                 std::vector<double> decay_profile, double anchor_variance);

    std::size_t anchor() const noexcept { return anchor_; }
    std::size_t size() const noexcept { return log_fugacity_.size(); }
    std::size_t site_index(std::size_t local) const noexcept { return anchor_ + 1 + local; }

    std::span<const double> log_fugacity() const noexcept { return log_fugacity_; }
    std::span<const double> decay_profile() const noexcept { return decay_; }
    std::span<const double> coupling_matrix() const noexcept { return coupling_; }
    double coupling(std::size_t j, std::size_t k) const noexcept { return coupling_[j * size() + k]; }
    double anchor_variance() const noexcept { return anchor_variance_; }

    /// Single-site coefficients at chemical potential phi: ln(L~ tau) + phi G_i w^{j-i}.
    std::vector<double> site_terms(double phi) const;

    /// Same subsystem with sigma^2 replaced by lambda * sigma^2 (couplings and G_i scale).
    GasSubsystem scaled(double lambda) const;

private:
    std::size_t anchor_ = 0;
    std::vector<double> log_fugacity_;
    std::vector<double> coupling_;
    std::vector<double> decay_;
    double anchor_variance_ = 0.0;
};

/// Assembles T_i from convexity-adjusted Libors indexed by tenor (size n, entries
/// i+1..n-1 are used).
GasSubsystem build_subsystem(std::span<const double> libor_adj, const TenorGrid& grid,
                             const ProcessSpec& spec, std::size_t anchor);

double config_log_weight(const GasSubsystem& sub, const Occupation& occ, double phi);

/// ln Z_i(phi) = ln N_i(phi) by Gray-code enumeration of all 2^m configurations.
PartitionValue enumerate_log_partition(const GasSubsystem& sub, double phi,
                                       std::size_t cap = kDefaultEnumerationCap);

/// ln of sum over configurations of exp(sum_j n_j linear_j + sum_{j<k} pair_jk n_j n_k),
/// the kernel behind every exact evaluation in this module. `pair` is row-major m x m.
double enumerate_log_sum(std::span<const double> linear, std::span<const double> pair,
                         std::size_t cap = kDefaultEnumerationCap);

/// One-step discounted bond P^_{i,i+1} as a function of the anchor state x_i.
double bond_value_at_state(const GasSubsystem& sub, double x_i,
                           std::size_t cap = kDefaultEnumerationCap);
double log_bond_value_at_state(const GasSubsystem& sub, double x_i,
                               std::size_t cap = kDefaultEnumerationCap);

/// <n_j> in the grand canonical ensemble at chemical potential phi.
std::vector<double> occupancy_expectation(const GasSubsystem& sub, double phi,
                                          std::size_t cap = kDefaultEnumerationCap);

/// Zero mean reversion solution: c_k^{(i)} grouped by particle number k, so that
///     N_i(phi) = sum_k c_k exp(k phi sigma^2 t_i).
/// Evaluated by a recursion over sites in O(m^2), independent of the enumerator.
struct BdtCoefficients {
    std::size_t anchor = 0;
    std::vector<double> log_c;  ///< ln c_k, k = 0..m
    double anchor_variance = 0.0;

    double log_N(double phi) const;
};

BdtCoefficients bdt_coefficients(std::span<const double> libor_adj, const TenorGrid& grid,
                                 const ProcessSpec& spec, std::size_t anchor);

}  // namespace latgas
