#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "latgas/cli/commands.hpp"
#include "latgas/parallel.hpp"
#include "latgas/path_oracle.hpp"
#include "latgas/random.hpp"
#include "output.hpp"

namespace latgas::cli {

using detail::format_number;

namespace {

struct RandomCase {
    TenorGrid grid;
    ProcessSpec spec;
    YieldCurve curve;
};

RandomCase random_case(Rng& rng, std::size_t n, double max_sigma, double max_gamma) {
    std::uniform_real_distribution<double> fwd(0.01, 0.08), sig(0.05, max_sigma), gam(0.0, max_gamma);
    const double tau = 0.25;
    std::vector<double> forwards(n);
    for (double& f : forwards) f = fwd(rng);
    // a quarter of the cases exercise the zero mean reversion route
    const double gamma = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 0.0 : gam(rng);
    return RandomCase{TenorGrid(n, tau), ProcessSpec(sig(rng), gamma), YieldCurve::from_forwards(forwards, tau)};
}

std::string describe(const RandomCase& c) {
    return "n=" + std::to_string(c.grid.periods()) + " sigma=" + format_number(c.spec.sigma, 4) +
           " gamma=" + format_number(c.spec.gamma, 4);
}

GasSubsystem with_fault(const GasSubsystem& sub, const std::string& fault) {
    if (fault != "coupling_sign") return sub;
    std::vector<double> coupling(sub.coupling_matrix().begin(), sub.coupling_matrix().end());
    for (double& c : coupling) c = -c;
    return GasSubsystem(sub.anchor(), {sub.log_fugacity().begin(), sub.log_fugacity().end()}, std::move(coupling),
                        {sub.decay_profile().begin(), sub.decay_profile().end()}, sub.anchor_variance());
}

SuiteResult calibration_suite(const RunConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, 1);
    double worst = 0.0;
    std::string worst_case;
    for (int k = 0; k < 5; ++k) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, config.validate_n)(rng);
        const auto c = random_case(rng, n, 0.4, 0.1);
        const auto model = calibrate(c.grid, c.spec, c.curve);
        for (double r : curve_residuals(model))
            if (r > worst) worst = r, worst_case = describe(c);
    }
    return {"calibration_exactness", worst <= kCurveTolerance,
            "max |N_i(0)/P_hat - 1| = " + format_number(worst, 3) + (worst_case.empty() ? "" : " at " + worst_case)};
}

// Couplings are covariances, hence nonnegative, and switching them on can only
// increase the partition sum.
SuiteResult attraction_suite(const RunConfig& config) {
    const std::size_t n = config.validate_n;
    const TenorGrid grid(n, 0.25);
    const auto model = calibrate(grid, ProcessSpec(0.3, 0.05), YieldCurve::flat_forward(0.05, grid));
    std::ostringstream detail;
    bool ok = true;
    for (std::size_t anchor = 0; anchor + 2 < n; ++anchor) {
        const GasSubsystem sub = with_fault(build_subsystem(model, anchor), config.inject_fault);
        const std::size_t m = sub.size();
        double min_coupling = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) min_coupling = std::min(min_coupling, sub.coupling(j, k));
        const double with = enumerate_log_partition(sub, 0.0).log_value;
        const double without = enumerate_log_partition(sub.scaled(0.0), 0.0).log_value;
        if (min_coupling < 0.0 || with < without) {
            ok = false;
            detail << "anchor " << anchor << ": min coupling " << format_number(min_coupling, 4) << ", ln Z "
                   << format_number(with, 8) << " vs uncoupled " << format_number(without, 8) << "; ";
        }
    }
    if (ok) detail << "all couplings nonnegative; coupled ln Z >= uncoupled ln Z at every anchor";
    return {"attraction", ok, detail.str()};
}

SuiteResult zero_reversion_suite(const RunConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, 3);
    double worst = 0.0;
    const std::size_t max_n = std::min<std::size_t>(10, config.validate_n);
    for (int k = 0; k < 4; ++k) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_n)(rng);
        auto c = random_case(rng, n, 0.4, 0.0);
        c.spec = ProcessSpec(c.spec.sigma, 1e-9);
        const auto model = calibrate(c.grid, c.spec, c.curve);
        const ProcessSpec flat(c.spec.sigma, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto bdt = bdt_coefficients(model.libor_adj, c.grid, flat, i);
            const auto sub = build_subsystem(model, i);
            for (double phi : {0.0, 1.0, 2.0}) {
                const double e = enumerate_log_partition(sub, phi).log_value;
                const double b = bdt.log_N(phi);
                worst = std::max(worst, std::abs(b - e) / std::max(std::abs(e), 1e-300));
            }
        }
    }
    return {"zero_reversion_limit", worst <= 1e-6, "max relative gap in ln N = " + format_number(worst, 3)};
}

SuiteResult moment_suite(const RunConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, 4);
    const auto c = random_case(rng, config.validate_n, 0.4, 0.1);
    const auto model = calibrate(c.grid, c.spec, c.curve);
    double worst_first = 0.0;
    for (std::size_t i = 0; i < c.grid.periods(); ++i)
        worst_first = std::max(worst_first, std::abs(libor_moment(model, i, 1) / c.curve.forward(i) - 1.0));

    const auto low = calibrate(c.grid, ProcessSpec(0.05, c.spec.gamma), c.curve);
    double worst_var = 0.0;
    for (std::size_t i = 1; i < c.grid.periods(); ++i) {
        const double m1 = libor_moment(low, i, 1), m2 = libor_moment(low, i, 2);
        const double g = variance_G(low.spec, c.grid.time(i));
        worst_var = std::max(worst_var, std::abs(std::log(m2 / (m1 * m1)) / g - 1.0));
    }
    const bool ok = worst_first <= 1e-12 && worst_var <= 0.01;
    return {"libor_moments", ok,
            "first moment max rel error " + format_number(worst_first, 3) + "; log-variance vs G max rel gap " +
                format_number(worst_var, 3) + " (" + describe(c) + ")"};
}

SuiteResult gaussian_identity_suite(const RunConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, 5);
    int passed = 0;
    const int cases = 5;
    double worst = 0.0;
    for (int k = 0; k < cases; ++k) {
        const std::size_t dates = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const ProcessSpec spec(std::uniform_real_distribution<double>(0.05, 0.4)(rng),
                               std::uniform_real_distribution<double>(0.0, 0.1)(rng));
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
        const TenorGrid grid(start + dates, 0.25);
        const double t0 = grid.time(start);
        const double x0 = start == 0 ? 0.0 : std::normal_distribution<double>(0.0, std::sqrt(variance_G(spec, t0)))(rng);
        std::vector<int> occ(dates);
        for (int& o : occ) o = std::uniform_int_distribution<int>(0, 1)(rng);
        const double exact = gaussian_moment_identity(spec, grid, occ, t0, x0);
        const auto mc = mc_gaussian_moment(spec, grid, occ, t0, x0, config.validate_paths, derive_seed(seed, 5, k));
        const double z = std::abs(mc.log_value - exact) / std::max(mc.std_error, 1e-300);
        worst = std::max(worst, z);
        if (z <= 3.0 || std::abs(mc.log_value - exact) < 1e-14) ++passed;
    }
    return {"gaussian_moment_identity", passed == cases,
            std::to_string(passed) + "/" + std::to_string(cases) + " within 3 s.e. (max z " + format_number(worst, 3) +
                ")"};
}

SuiteResult oracle_suite(const RunConfig& config, std::uint64_t seed) {
    Rng rng = make_rng(seed, 6);
    const int cases = 20;
    int passed = 0;
    double worst = 0.0;
    for (int k = 0; k < cases; ++k) {
        const auto c = random_case(rng, config.validate_n, 0.4, 0.1);
        const std::size_t anchor = std::uniform_int_distribution<std::size_t>(0, config.validate_n - 2)(rng);
        const auto model = calibrate(c.grid, c.spec, c.curve, {}, anchor);
        const double exact = exact_convexity_expectation_N(model, anchor, 1.0).log_value;
        const auto mc = mc_convexity_N(model, anchor, 1.0, config.validate_paths, derive_seed(seed, 6, k));
        const double z = std::abs(mc.log_value - exact) / std::max(mc.std_error, 1e-300);
        worst = std::max(worst, z);
        if (z <= 3.0) ++passed;
    }
    return {"oracle_vs_enumeration", passed >= 19,
            std::to_string(passed) + "/" + std::to_string(cases) + " within 3 s.e. (need 19; max z " +
                format_number(worst, 3) + ")"};
}

SuiteResult sampler_suite(const RunConfig& config, std::uint64_t seed) {
    const std::size_t n = 10;
    const TenorGrid grid(n, 0.25);
    const auto model = calibrate(grid, ProcessSpec(0.2, 0.05), YieldCurve::flat_forward(0.05, grid));
    const GasSubsystem sub = build_subsystem(model, 1);
    ChainConfig chain = config.engine.chain;
    chain.seed = derive_seed(seed, 7);
    const auto ti = estimate_lnZ_thermodynamic(sub, 1.0, CouplingPath::gauss_legendre(config.engine.path_nodes), chain);
    const double exact = enumerate_log_partition(sub, 1.0).log_value;
    const double gap = std::abs(ti.log_value - exact);
    const double tol = std::max(1e-3, 2.0 * ti.std_error);
    return {"sampler_thermodynamic_integration", gap <= tol && ti.reliable,
            "m=" + std::to_string(sub.size()) + " |TI - exact| = " + format_number(gap, 3) + " (tolerance " +
                format_number(tol, 3) + ", reliable=" + (ti.reliable ? "yes" : "no") + ")"};
}

}  // namespace

std::vector<SuiteResult> run_validation(const RunConfig& config) {
    detail::require_seed(config, "for validate");
    const std::uint64_t seed = *config.seed;
    std::vector<SuiteResult> out;
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    guarded("calibration_exactness", [&] { return calibration_suite(config, seed); });
    guarded("attraction", [&] { return attraction_suite(config); });
    guarded("zero_reversion_limit", [&] { return zero_reversion_suite(config, seed); });
    guarded("libor_moments", [&] { return moment_suite(config, seed); });
    guarded("gaussian_moment_identity", [&] { return gaussian_identity_suite(config, seed); });
    guarded("oracle_vs_enumeration", [&] { return oracle_suite(config, seed); });
    guarded("sampler_thermodynamic_integration", [&] { return sampler_suite(config, seed); });
    return out;
}

std::string validation_report_json(const RunConfig& config, const std::vector<SuiteResult>& suites) {
    nlohmann::ordered_json report;
    report["seed"] = config.seed.value_or(0);
    report["n"] = config.validate_n;
    report["paths"] = config.validate_paths;
    report["inject_fault"] = config.inject_fault.empty() ? "none" : config.inject_fault;
    bool all = true;
    auto list = nlohmann::ordered_json::array();
    for (const auto& s : suites) {
        all = all && s.passed;
        list.push_back({{"name", s.name}, {"passed", s.passed}, {"detail", s.detail}});
    }
    report["suites"] = list;
    report["passed"] = all;
    return report.dump(2) + "\n";
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& log) {
    return detail::run_guarded(log, [&] {
        set_thread_count(config.threads);
        const auto suites = run_validation(config);
        bool all = true;
        for (const auto& s : suites) {
            out << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
            all = all && s.passed;
        }
        const auto path = detail::write_text_file(config.out_dir, "validate_report.json",
                                                  validation_report_json(config, suites));
        log << "wrote " << path.string() << "\n";
        return all ? kExitSuccess : kExitNumerical;
    });
}

}  // namespace latgas::cli
