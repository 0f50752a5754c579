#include "latgas/path_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "latgas/parallel.hpp"
#include "test_support.hpp"

namespace latgas {
namespace {

using testing::random_model;

TEST(SimulatePathsTest, MomentsMatchProcess) {
    const ProcessSpec spec(0.3, 0.1);
    const TenorGrid grid(8, 0.5);
    const auto batch = simulate_paths(spec, grid, 200000, 1);
    ASSERT_EQ(batch.dates(), 9u);
    double m = 0.0, v = 0.0, c = 0.0;
    for (std::size_t p = 0; p < batch.count; ++p) {
        EXPECT_EQ(batch.at(p, 0), 0.0);
        m += batch.at(p, 8);
        v += batch.at(p, 8) * batch.at(p, 8);
        c += batch.at(p, 3) * batch.at(p, 8);
    }
    const double n = static_cast<double>(batch.count);
    EXPECT_NEAR(m / n, 0.0, 4.0 * std::sqrt(variance_G(spec, 4.0) / n));
    EXPECT_NEAR(v / n / variance_G(spec, 4.0), 1.0, 0.015);
    EXPECT_NEAR(c / n / covariance_X(spec, 1.5, 4.0), 1.0, 0.03);
}

TEST(SimulatePathsTest, DeterministicAndThreadIndependent) {
    const ProcessSpec spec(0.2, 0.05);
    const TenorGrid grid(6, 0.25);
    set_thread_count(1);
    const auto a = simulate_paths(spec, grid, 40000, 77);
    set_thread_count(4);
    const auto b = simulate_paths(spec, grid, 40000, 77);
    set_thread_count(0);
    EXPECT_EQ(a.values, b.values);
    const auto c = simulate_paths(spec, grid, 40000, 78);
    EXPECT_NE(a.values, c.values);
}

TEST(SimulatePathsTest, TruncationClipsValues) {
    const ProcessSpec spec(0.5, 0.0);
    const TenorGrid grid(10, 0.25);
    const auto batch = simulate_paths(spec, grid, 20000, 3, 1.0);
    for (std::size_t p = 0; p < batch.count; ++p)
        for (std::size_t k = 1; k < batch.dates(); ++k)
            EXPECT_LE(std::abs(batch.at(p, k)), 0.5 * std::sqrt(batch.times[k]) + 1e-15);
    EXPECT_THROW(simulate_paths(spec, grid, 10, 3, 0.0), std::invalid_argument);
    EXPECT_THROW(simulate_paths(spec, grid, 0, 3), std::invalid_argument);
}

TEST(LogScaleMomentsTest, MergeMatchesSequentialAccumulation) {
    LogScaleMoments all, left, right;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    for (int k = 0; k < 1000; ++k) {
        const double v = 700.0 + 2.0 * z(rng);  // exp overflows a double
        all.add(v);
        (k < 400 ? left : right).add(v);
    }
    left.merge(right);
    EXPECT_EQ(left.count(), 1000.0);
    EXPECT_NEAR(left.log_mean(), all.log_mean(), 1e-12);
    EXPECT_NEAR(left.relative_std_error(), all.relative_std_error(), 1e-10);
    EXPECT_TRUE(std::isfinite(all.log_mean()));
}

TEST(LogScaleMomentsTest, SmallSampleValues) {
    LogScaleMoments acc;
    for (double x : {std::log(1.0), std::log(2.0), std::log(3.0)}) acc.add(x);
    EXPECT_NEAR(std::exp(acc.log_mean()), 2.0, 1e-14);
    EXPECT_NEAR(acc.relative_std_error(), std::sqrt(1.0 / 3.0) / 2.0, 1e-14);
    const auto est = acc.estimate();
    EXPECT_NEAR(est.mean, 2.0, 1e-14);
}

TEST(BondValueOracleTest, AgreesWithEnumeration) {
    Rng rng(21);
    const auto model = random_model(rng, 8, 0.3, 0.05);
    const auto sub = build_subsystem(model, 2);
    for (double x : {-0.2, 0.0, 0.3}) {
        const auto mc = mc_bond_value(model, 2, x, 200000, 9);
        EXPECT_NEAR(mc.mean, bond_value_at_state(sub, x), 4.0 * mc.std_error) << "x=" << x;
    }
}

TEST(ConvexityOracleTest, AgreesWithEnumeration) {
    Rng rng(22);
    for (int trial = 0; trial < 4; ++trial) {
        const auto model = random_model(rng, 10, 0.1 + 0.1 * trial, 0.03 * trial);
        const auto mc = mc_convexity_N(model, 1, 1.0, 200000, 100 + trial);
        const double exact = exact_convexity_expectation_N(model, 1, 1.0).log_value;
        EXPECT_EQ(mc.method, Method::sampled);
        EXPECT_NEAR(mc.log_value, exact, 4.0 * mc.std_error) << "trial " << trial;
    }
}

TEST(ConvexityOracleTest, DeterministicForFixedSeed) {
    Rng rng(23);
    const auto model = random_model(rng, 6, 0.3, 0.02);
    const auto a = mc_convexity_N(model, 0, 1.0, 30000, 5);
    const auto b = mc_convexity_N(model, 0, 1.0, 30000, 5);
    EXPECT_EQ(a.log_value, b.log_value);
}

TEST(ConvexityOracleTest, RequiresCalibratedLibors) {
    const TenorGrid grid(10, 0.25);
    const auto model = calibrate(grid, ProcessSpec(0.2, 0.02), YieldCurve::flat_forward(0.05, grid), {}, 6);
    EXPECT_THROW(mc_convexity_N(model, 3, 1.0, 1000, 1), std::invalid_argument);
    EXPECT_THROW(mc_convexity_N(model, 6, 1.0, 0, 1), std::invalid_argument);
}

TEST(GaussianMomentOracleTest, AgreesWithClosedForm) {
    const ProcessSpec spec(0.35, 0.07);
    const TenorGrid grid(7, 0.25);
    const std::vector<int> occ{1, 0, 1, 1, 0};
    const double t = 0.5, x = 0.12;
    const auto mc = mc_gaussian_moment(spec, grid, occ, t, x, 400000, 31);
    EXPECT_NEAR(mc.log_value, gaussian_moment_identity(spec, grid, occ, t, x), 4.0 * mc.std_error);
}

}  // namespace
}  // namespace latgas
