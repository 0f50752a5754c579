#include "latgas/lattice_gas.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "latgas/errors.hpp"
#include "latgas/log_sum_exp.hpp"
#include "latgas/parallel.hpp"

namespace latgas {

// ---------------------------------------------------------------------------
// Occupation

Occupation::Occupation(std::vector<std::uint8_t> n) : n_(std::move(n)) {
    for (auto v : n_)
        if (v > 1) throw std::invalid_argument("occupation numbers must be 0 or 1");
}

Occupation Occupation::from_index(std::size_t sites, std::uint64_t index) {
    if (sites > 64) throw std::invalid_argument("Occupation::from_index: more than 64 sites");
    if (sites < 64 && (index >> sites) != 0)
        throw std::invalid_argument("Occupation::from_index: index out of range");
    Occupation occ(sites);
    for (std::size_t j = 0; j < sites; ++j) occ.n_[j] = static_cast<std::uint8_t>((index >> j) & 1U);
    return occ;
}

std::uint64_t Occupation::to_index() const {
    if (n_.size() > 64) throw std::logic_error("Occupation::to_index: more than 64 sites");
    std::uint64_t index = 0;
    for (std::size_t j = 0; j < n_.size(); ++j) index |= static_cast<std::uint64_t>(n_[j]) << j;
    return index;
}

std::size_t Occupation::count() const noexcept {
    std::size_t c = 0;
    for (auto v : n_) c += v;
    return c;
}

// ---------------------------------------------------------------------------
// GasSubsystem

GasSubsystem::GasSubsystem(std::size_t anchor, std::vector<double> log_fugacity,
                           std::vector<double> coupling, std::vector<double> decay_profile,
                           double anchor_variance)
    : anchor_(anchor),
      log_fugacity_(std::move(log_fugacity)),
      coupling_(std::move(coupling)),
      decay_(std::move(decay_profile)),
      anchor_variance_(anchor_variance) {
    const std::size_t m = log_fugacity_.size();
    if (coupling_.size() != m * m) throw std::invalid_argument("GasSubsystem: coupling must be m x m");
    if (decay_.size() != m) throw std::invalid_argument("GasSubsystem: decay profile must have m entries");
    if (!std::isfinite(anchor_variance_) || anchor_variance_ < 0.0)
        throw std::invalid_argument("GasSubsystem: anchor variance must be finite and >= 0");
    for (std::size_t j = 0; j < m; ++j) {
        if (!std::isfinite(log_fugacity_[j]))
            throw std::invalid_argument("GasSubsystem: non-finite log fugacity at site " + std::to_string(j));
        for (std::size_t k = 0; k < m; ++k) {
            const double v = coupling_[j * m + k];
            if (!std::isfinite(v)) throw std::invalid_argument("GasSubsystem: non-finite coupling");
            if (v != coupling_[k * m + j]) throw std::invalid_argument("GasSubsystem: coupling not symmetric");
        }
    }
}

std::vector<double> GasSubsystem::site_terms(double phi) const {
    std::vector<double> a(size());
    for (std::size_t j = 0; j < size(); ++j)
        a[j] = log_fugacity_[j] + phi * anchor_variance_ * decay_[j];
    return a;
}

GasSubsystem GasSubsystem::scaled(double lambda) const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("GasSubsystem::scaled: lambda must be >= 0");
    auto coupling = coupling_;
    for (auto& v : coupling) v *= lambda;
    return GasSubsystem(anchor_, log_fugacity_, std::move(coupling), decay_, anchor_variance_ * lambda);
}

GasSubsystem build_subsystem(std::span<const double> libor_adj, const TenorGrid& grid,
                             const ProcessSpec& spec, std::size_t anchor) {
    const std::size_t n = grid.periods();
    if (libor_adj.size() != n)
        throw std::invalid_argument("build_subsystem: expected " + std::to_string(n) + " Libors, got " +
                                    std::to_string(libor_adj.size()));
    if (anchor >= n) throw std::invalid_argument("build_subsystem: anchor index must be < n");

    const std::size_t m = n - anchor - 1;
    std::vector<double> log_fug(m), decay(m), coupling(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t j = anchor + 1 + a;
        const double lj = libor_adj[j];
        if (!(lj > 0.0) || !std::isfinite(lj))
            throw std::invalid_argument("build_subsystem: convexity-adjusted Libor at index " +
                                        std::to_string(j) + " must be positive");
        log_fug[a] = std::log(lj * grid.tau());
        decay[a] = decay_weight(spec, grid.tau(), static_cast<long>(a + 1));
        for (std::size_t b = a + 1; b < m; ++b) {
            const double x = covariance_X(spec, grid.time(j), grid.time(anchor + 1 + b));
            coupling[a * m + b] = x;
            coupling[b * m + a] = x;
        }
    }
    return GasSubsystem(anchor, std::move(log_fug), std::move(coupling), std::move(decay),
                        variance_G(spec, grid.time(anchor)));
}

double config_log_weight(const GasSubsystem& sub, const Occupation& occ, double phi) {
    if (occ.size() != sub.size()) throw std::invalid_argument("config_log_weight: size mismatch");
    const auto a = sub.site_terms(phi);
    double e = 0.0;
    for (std::size_t j = 0; j < sub.size(); ++j) {
        if (!occ[j]) continue;
        e += a[j];
        for (std::size_t k = j + 1; k < sub.size(); ++k)
            if (occ[k]) e += sub.coupling(j, k);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Enumeration kernel

namespace {

// Sites [0, kLowBits) are swept by Gray code inside a block; higher sites are
// fixed per block. Blocks are reduced in index order.
constexpr std::size_t kLowBits = 14;
// Flipping a Gray bit at or above this level triggers an exact recomputation of
// the running exponent and fields, bounding round-off drift.
constexpr unsigned kRefreshBit = 10;

struct Problem {
    std::span<const double> linear;
    std::span<const double> pair;
    std::size_t m;

    double J(std::size_t j, std::size_t k) const noexcept { return pair[j * m + k]; }
};

// Visits every configuration of the low q sites with linear terms `lin` and the
// low-site block of the pair matrix, in Gray-code order. The visitor receives
// the low bit pattern and its exponent.
//
// When Gray bit b flips, the lower bits are always in the pattern 10..0 (only bit
// b-1 set), so the energy change needs only high[b] = sum_{k>b occupied} J_bk and
// J_{b,b-1}. Keeping high[] current costs O(b) per flip, O(1) amortized.
template <class Visit>
void gray_sweep(const Problem& p, const double* lin, std::size_t q, Visit&& visit) {
    std::array<double, kLowBits> high{};
    std::uint64_t occ = 0;
    double e = 0.0;
    visit(occ, e);

    const std::uint64_t total = std::uint64_t{1} << q;
    for (std::uint64_t s = 1; s < total; ++s) {
        const unsigned b = static_cast<unsigned>(std::countr_zero(s));
        const bool on = ((occ >> b) & 1U) == 0;
        occ ^= std::uint64_t{1} << b;
        if (b >= kRefreshBit) {
            e = 0.0;
            for (std::size_t c = 0; c < q; ++c) {
                high[c] = 0.0;
                for (std::size_t k = c + 1; k < q; ++k)
                    if ((occ >> k) & 1U) high[c] += p.J(c, k);
                if ((occ >> c) & 1U) e += lin[c] + high[c];
            }
        } else {
            const double delta = lin[b] + high[b] + (b > 0 ? p.J(b, b - 1) : 0.0);
            e += on ? delta : -delta;
            for (unsigned c = 0; c < b; ++c) high[c] += on ? p.J(c, b) : -p.J(c, b);
        }
        visit(occ, e);
    }
}

struct Block {
    std::vector<double> lin;  // low-site linear terms including the field of fixed high sites
    double offset = 0.0;      // exponent contribution of the fixed high sites
};

Block make_block(const Problem& p, std::size_t q, std::uint64_t high_bits) {
    Block blk;
    blk.lin.assign(p.linear.begin(), p.linear.begin() + static_cast<std::ptrdiff_t>(q));
    for (std::size_t h = q; h < p.m; ++h) {
        if (((high_bits >> (h - q)) & 1U) == 0) continue;
        blk.offset += p.linear[h];
        for (std::size_t h2 = h + 1; h2 < p.m; ++h2)
            if ((high_bits >> (h2 - q)) & 1U) blk.offset += p.J(h, h2);
        for (std::size_t b = 0; b < q; ++b) blk.lin[b] += p.J(b, h);
    }
    return blk;
}

void check_cap(std::size_t m, std::size_t cap) {
    if (cap > kMaxEnumerableSites)
        throw std::invalid_argument("enumeration cap above the supported maximum of " +
                                    std::to_string(kMaxEnumerableSites));
    if (m > cap) throw EnumerationCapExceeded(m, cap);
}

LogSumExp tree_reduce(std::vector<LogSumExp>& parts) {
    if (parts.empty()) return {};
    for (std::size_t width = 1; width < parts.size(); width *= 2)
        for (std::size_t k = 0; k + width < parts.size(); k += 2 * width) parts[k].merge(parts[k + width]);
    return parts.front();
}

double log_sum(const Problem& p) {
    const std::size_t q = std::min(p.m, kLowBits);
    const std::size_t blocks = std::size_t{1} << (p.m - q);
    std::vector<LogSumExp> parts(blocks);
    parallel_for(blocks, [&](std::size_t h) {
        const Block blk = make_block(p, q, h);
        LogSumExp acc;
        gray_sweep(p, blk.lin.data(), q, [&](std::uint64_t, double e) { acc.add(blk.offset + e); });
        parts[h] = acc;
    });
    return tree_reduce(parts).value();
}

}  // namespace

double enumerate_log_sum(std::span<const double> linear, std::span<const double> pair, std::size_t cap) {
    const std::size_t m = linear.size();
    if (pair.size() != m * m) throw std::invalid_argument("enumerate_log_sum: pair matrix must be m x m");
    check_cap(m, cap);
    if (m == 0) return 0.0;
    return log_sum(Problem{linear, pair, m});
}

PartitionValue enumerate_log_partition(const GasSubsystem& sub, double phi, std::size_t cap) {
    const auto a = sub.site_terms(phi);
    return PartitionValue::exact(enumerate_log_sum(a, sub.coupling_matrix(), cap));
}

double log_bond_value_at_state(const GasSubsystem& sub, double x_i, std::size_t cap) {
    // Conditioning on x_i turns the subset sum into a gas with linear terms
    // ln(L~ tau) + w_j x_i - w_j^2 G_i / 2 and couplings X_jk - w_j w_k G_i.
    const std::size_t m = sub.size();
    check_cap(m, cap);
    const double g = sub.anchor_variance();
    const auto w = sub.decay_profile();
    std::vector<double> lin(m), pair(m * m);
    for (std::size_t j = 0; j < m; ++j) {
        lin[j] = sub.log_fugacity()[j] + w[j] * x_i - 0.5 * w[j] * w[j] * g;
        for (std::size_t k = 0; k < m; ++k) pair[j * m + k] = sub.coupling(j, k) - w[j] * w[k] * g;
    }
    return enumerate_log_sum(lin, pair, cap);
}

double bond_value_at_state(const GasSubsystem& sub, double x_i, std::size_t cap) {
    return std::exp(log_bond_value_at_state(sub, x_i, cap));
}

std::vector<double> occupancy_expectation(const GasSubsystem& sub, double phi, std::size_t cap) {
    const std::size_t m = sub.size();
    check_cap(m, cap);
    if (m == 0) return {};
    const auto a = sub.site_terms(phi);
    const Problem p{a, sub.coupling_matrix(), m};
    const double log_z = log_sum(p);

    const std::size_t q = std::min(m, kLowBits);
    const std::size_t blocks = std::size_t{1} << (m - q);
    std::vector<std::vector<double>> parts(blocks, std::vector<double>(m, 0.0));
    parallel_for(blocks, [&](std::size_t h) {
        const Block blk = make_block(p, q, h);
        auto& acc = parts[h];
        std::array<double, kLowBits> low{};
        double high_mass = 0.0;
        gray_sweep(p, blk.lin.data(), q, [&](std::uint64_t occ, double e) {
            const double prob = std::exp(blk.offset + e - log_z);
            high_mass += prob;
            for (std::size_t b = 0; b < q; ++b)
                if ((occ >> b) & 1U) low[b] += prob;
        });
        for (std::size_t b = 0; b < q; ++b) acc[b] = low[b];
        for (std::size_t hbit = q; hbit < m; ++hbit)
            if ((h >> (hbit - q)) & 1U) acc[hbit] = high_mass;
    });
    std::vector<double> mean(m, 0.0);
    for (const auto& part : parts)
        for (std::size_t j = 0; j < m; ++j) mean[j] += part[j];
    for (auto& v : mean) v = std::min(1.0, std::max(0.0, v));
    return mean;
}

// ---------------------------------------------------------------------------
// Zero mean reversion coefficients

double BdtCoefficients::log_N(double phi) const {
    LogSumExp acc;
    for (std::size_t k = 0; k < log_c.size(); ++k)
        acc.add(log_c[k] + static_cast<double>(k) * phi * anchor_variance);
    return acc.value();
}

BdtCoefficients bdt_coefficients(std::span<const double> libor_adj, const TenorGrid& grid,
                                 const ProcessSpec& spec, std::size_t anchor) {
    if (!spec.zero_reversion(grid.horizon()))
        throw std::invalid_argument("bdt_coefficients: requires zero mean reversion");
    const std::size_t n = grid.periods();
    if (libor_adj.size() != n) throw std::invalid_argument("bdt_coefficients: Libor vector size mismatch");
    if (anchor >= n) throw std::invalid_argument("bdt_coefficients: anchor index must be < n");

    const double s2 = spec.sigma * spec.sigma;
    const std::size_t m = n - anchor - 1;
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    // Add sites from the last date backwards. A site j placed in front of q
    // already selected later sites gains sigma^2 min(t_j, t_k) = sigma^2 t_j per pair.
    std::vector<double> log_c(m + 1, kNegInf);
    log_c[0] = 0.0;
    for (std::size_t added = 0; added < m; ++added) {
        const std::size_t j = n - 1 - added;
        const double lj = libor_adj[j];
        if (!(lj > 0.0) || !std::isfinite(lj))
            throw std::invalid_argument("bdt_coefficients: convexity-adjusted Libor at index " +
                                        std::to_string(j) + " must be positive");
        const double log_fug = std::log(lj * grid.tau());
        const double tj = grid.time(j);
        for (std::size_t q = added + 1; q-- > 0;) {
            if (log_c[q] == kNegInf) continue;
            const double term = log_c[q] + log_fug + static_cast<double>(q) * s2 * tj;
            LogSumExp acc;
            acc.add(log_c[q + 1]);
            acc.add(term);
            log_c[q + 1] = acc.value();
        }
    }
    return BdtCoefficients{anchor, std::move(log_c), s2 * grid.time(anchor)};
}

}  // namespace latgas
