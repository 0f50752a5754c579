#include "latgas/sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "latgas/parallel.hpp"
#include "test_support.hpp"

namespace latgas {
namespace {

using testing::random_model;
using testing::random_subsystem;

ChainConfig quick_chain(std::uint64_t seed) {
    ChainConfig cfg;
    cfg.seed = seed;
    cfg.burn_in = 300;
    cfg.samples = 5000;
    return cfg;
}

TEST(ChainConfigTest, Validation) {
    ChainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.chains = 1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = ChainConfig{};
    cfg.samples = 10;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = ChainConfig{};
    cfg.thinning = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(CouplingPathTest, IntegratesPolynomialsOnUnitInterval) {
    const auto path = CouplingPath::gauss_legendre(16);
    ASSERT_EQ(path.lambdas.size(), 16u);
    double sum = 0.0, cubic = 0.0;
    for (std::size_t k = 0; k < 16; ++k) {
        EXPECT_GT(path.lambdas[k], 0.0);
        EXPECT_LT(path.lambdas[k], 1.0);
        sum += path.weights[k];
        cubic += path.weights[k] * std::pow(path.lambdas[k], 3);
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(cubic, 0.25, 1e-14);
}

TEST(MetropolisChainTest, FlipRatioMatchesWeightDifference) {
    Rng rng(4);
    const auto sub = random_subsystem(rng, 9);
    const double phi = 0.7;
    MetropolisChain chain(sub, phi, Occupation::from_index(9, 0b101100101));
    for (std::size_t j = 0; j < 9; ++j) {
        Occupation flipped = chain.occupation();
        flipped.flip(j);
        const double expected = config_log_weight(sub, flipped, phi) - config_log_weight(sub, chain.occupation(), phi);
        EXPECT_NEAR(chain.flip_log_ratio(j), expected, 1e-13);
    }
}

TEST(MetropolisChainTest, FieldsStayConsistentOverLongRuns) {
    Rng rng(5);
    const auto sub = random_subsystem(rng, 11);
    MetropolisChain chain(sub, 1.0, Occupation(11));
    Rng mc(6);
    for (int s = 0; s < 500; ++s) chain.sweep(mc);
    EXPECT_GT(chain.proposed(), 0u);
    EXPECT_LE(chain.accepted(), chain.proposed());
    for (std::size_t j = 0; j < 11; ++j) {
        double f = 0.0;
        for (std::size_t k = 0; k < 11; ++k)
            if (k != j && chain.occupation()[k]) f += sub.coupling(j, k);
        EXPECT_NEAR(chain.field(j), f, 1e-12);
    }
    EXPECT_NEAR(chain.log_weight(), config_log_weight(sub, chain.occupation(), 1.0), 1e-12);
}

TEST(MetropolisChainTest, SweepWrapperIsDeterministic) {
    Rng rng(7);
    const auto sub = random_subsystem(rng, 8);
    Occupation a(8), b(8);
    Rng ra(3), rb(3);
    for (int s = 0; s < 50; ++s) {
        metropolis_sweep(sub, 1.0, a, ra);
        metropolis_sweep(sub, 1.0, b, rb);
    }
    EXPECT_EQ(a, b);
}

TEST(MetropolisChainTest, VisitsBoltzmannDistribution) {
    // Small system: empirical state frequencies against exact weights.
    Rng rng(8);
    const auto sub = random_subsystem(rng, 4);
    const double phi = 1.0;
    const double log_z = testing::naive_log_partition(sub, phi);
    MetropolisChain chain(sub, phi, Occupation(4));
    Rng mc(9);
    std::vector<double> counts(16, 0.0);
    const int sweeps = 200000;
    for (int s = 0; s < sweeps; ++s) {
        chain.sweep(mc);
        counts[chain.occupation().to_index()] += 1.0;
    }
    double tv = 0.0;
    for (std::uint64_t idx = 0; idx < 16; ++idx) {
        const double p = std::exp(config_log_weight(sub, Occupation::from_index(4, idx), phi) - log_z);
        tv += 0.5 * std::abs(counts[idx] / sweeps - p);
    }
    EXPECT_LT(tv, 0.01);
}

TEST(ChainSummaryTest, IidSamplesGiveClassicalStandardError) {
    std::vector<std::vector<double>> chains(4);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    for (auto& c : chains)
        for (int k = 0; k < 5000; ++k) c.push_back(z(rng));
    const auto s = summarize_chains(chains);
    EXPECT_NEAR(s.mean, 0.0, 0.05);
    EXPECT_NEAR(s.std_error, 1.0 / std::sqrt(20000.0), 0.3 / std::sqrt(20000.0));
    EXPECT_LT(s.rhat, 1.01);
}

TEST(ChainSummaryTest, DisagreeingChainsAreFlagged) {
    std::vector<std::vector<double>> chains(4);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    for (std::size_t c = 0; c < 4; ++c)
        for (int k = 0; k < 2000; ++k) chains[c].push_back(z(rng) + 3.0 * static_cast<double>(c));
    EXPECT_GT(summarize_chains(chains).rhat, 1.1);
}

TEST(ThermodynamicIntegrationTest, MatchesEnumeration) {
    Rng rng(12);
    const auto model = random_model(rng, 10, 0.25, 0.05);
    const auto sub = build_subsystem(model, 0);
    const auto ti = estimate_lnZ_thermodynamic(sub, 1.0, CouplingPath::gauss_legendre(16), quick_chain(13));
    const double exact = enumerate_log_partition(sub, 1.0).log_value;
    EXPECT_EQ(ti.method, Method::sampled);
    EXPECT_TRUE(ti.reliable);
    EXPECT_GT(ti.std_error, 0.0);
    EXPECT_NEAR(ti.log_value, exact, std::max(1e-3, 3.0 * ti.std_error));
}

TEST(ThermodynamicIntegrationTest, ReproducibleAcrossThreadCounts) {
    Rng rng(14);
    const auto sub = random_subsystem(rng, 8);
    const auto cfg = quick_chain(15);
    set_thread_count(1);
    const auto a = estimate_lnZ_thermodynamic(sub, 1.0, CouplingPath::gauss_legendre(8), cfg);
    set_thread_count(3);
    const auto b = estimate_lnZ_thermodynamic(sub, 1.0, CouplingPath::gauss_legendre(8), cfg);
    set_thread_count(0);
    EXPECT_EQ(a.log_value, b.log_value);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(OccupancyEstimateTest, MatchesExactOccupancy) {
    Rng rng(16);
    const auto sub = random_subsystem(rng, 10);
    const auto est = estimate_occupancy(sub, 1.0, quick_chain(17));
    const auto exact = occupancy_expectation(sub, 1.0);
    ASSERT_EQ(est.mean.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(est.mean[j], exact[j], std::max(2e-3, 4.0 * est.std_error[j]));
}

}  // namespace
}  // namespace latgas
