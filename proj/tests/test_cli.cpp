#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "latgas/cli/commands.hpp"
#include "latgas/cli/config.hpp"

namespace latgas::cli {
namespace {

namespace fs = std::filesystem;

const char* kBase = R"(# test config
[grid]
n = 12
tau = 0.25

[process]
sigma_grid = 0.05:0.30:0.05
gamma = 0.02

[curve]
flat_forward = 0.05

[scan]
index = 4

[run]
seed = 11
)";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("latgas_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

TEST(ConfigTest, ParsesAllSections) {
    const auto c = parse_config(kBase);
    EXPECT_EQ(c.n, 12u);
    EXPECT_DOUBLE_EQ(c.tau, 0.25);
    ASSERT_EQ(c.sigmas.size(), 6u);
    EXPECT_DOUBLE_EQ(c.sigmas[5], 0.3);
    EXPECT_TRUE(c.sigma_grid);
    EXPECT_EQ(c.gammas, std::vector<double>{0.02});
    EXPECT_DOUBLE_EQ(*c.flat_forward, 0.05);
    EXPECT_EQ(c.scan_index, 4u);
    EXPECT_EQ(*c.seed, 11u);
    EXPECT_EQ(c.engine.chain.seed, 11u);
}

TEST(ConfigTest, EffectiveConfigRoundTrips) {
    auto c = parse_config(kBase);
    c.engine.method = Method::sampled;
    c.engine.chain.samples = 1234;
    c.svg = true;
    c.out_dir = "some/dir";
    EXPECT_EQ(parse_config(to_config_text(c)), c);

    auto d = parse_config(R"([grid]
n = 3
tau = 0.5
[process]
sigma = 0.1
gamma_list = 0, 0.1
[curve]
discounts = 1, 0.98, 0.96, 0.93
)");
    EXPECT_EQ(parse_config(to_config_text(d)), d);
}

TEST(ConfigTest, MissingTauIsNamed) {
    std::string text = kBase;
    text.replace(text.find("tau = 0.25\n"), 11, "");
    try {
        parse_config(text);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "grid.tau");
        EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
    }
}

TEST(ConfigTest, ErrorsCarryLineNumbers) {
    try {
        parse_config("[grid]\nn = 4\ntau = abc\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.field(), "grid.tau");
    }
    try {
        parse_config("[grid]\nn = 4\nwidth = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.field(), "grid.width");
    }
}

TEST(ConfigTest, RejectsInvalidCombinations) {
    const std::string head = "[grid]\nn = 3\ntau = 0.25\n[process]\ngamma = 0\n";
    // two curve forms
    EXPECT_THROW(parse_config(head + "sigma = 0.1\n[curve]\nflat_forward = 0.05\ndiscounts = 1, 0.99, 0.98, 0.97\n"),
                 ConfigError);
    // no curve
    EXPECT_THROW(parse_config(head + "sigma = 0.1\n"), ConfigError);
    // sigma grid not increasing
    EXPECT_THROW(parse_config(head + "sigma_grid = 0.1, 0.3, 0.2\n[curve]\nflat_forward = 0.05\n"), ConfigError);
    // wrong discount count
    EXPECT_THROW(parse_config(head + "sigma = 0.1\n[curve]\ndiscounts = 1, 0.99\n"), ConfigError);
    // duplicate key
    EXPECT_THROW(parse_config(head + "sigma = 0.1\nsigma = 0.2\n[curve]\nflat_forward = 0.05\n"), ConfigError);
    // unknown engine
    EXPECT_THROW(parse_config(head + "sigma = 0.1\n[curve]\nflat_forward = 0.05\n[engine]\nmethod = magic\n"),
                 ConfigError);
}

TEST(ConfigTest, ShippedConfigsParse) {
    for (const auto& entry : fs::directory_iterator(fs::path(LATGAS_SOURCE_DIR) / "configs")) {
        const auto c = load_config(entry.path().string());
        EXPECT_EQ(parse_config(to_config_text(c)), c) << entry.path();
    }
}

TEST(ConfigTest, NumberLists) {
    const auto r = parse_number_list("0.05:0.60:0.01");
    ASSERT_EQ(r.size(), 56u);
    EXPECT_DOUBLE_EQ(r.front(), 0.05);
    EXPECT_DOUBLE_EQ(r[28], 0.33);
    EXPECT_DOUBLE_EQ(r.back(), 0.6);
    EXPECT_EQ(parse_number_list("1, 2.5,3"), (std::vector<double>{1.0, 2.5, 3.0}));
    EXPECT_THROW(parse_number_list("1:2"), std::invalid_argument);
    EXPECT_THROW(parse_number_list("a, b"), std::invalid_argument);
}

TEST(CalibrateCommandTest, ZeroVolatilityGivesConstantLibors) {
    auto c = parse_config(kBase);
    c.sigmas = {0.0};
    c.sigma_grid = false;
    c.out_dir = scratch_dir("cal0").string();
    std::ostringstream log;
    ASSERT_EQ(cmd_calibrate(c, log), kExitSuccess) << log.str();
    const auto rows = parse_csv(read_file(fs::path(c.out_dir) / "calibration.csv"));
    ASSERT_EQ(rows.size(), 13u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"i", "t", "fwd", "libor_adj", "lnN1", "curve_residual", "curve_ok"}));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        EXPECT_NEAR(std::stod(rows[r][3]), 0.05, 1e-13);
        EXPECT_EQ(rows[r][6], "1");
    }
    EXPECT_EQ(parse_config(read_file(fs::path(c.out_dir) / "effective_config.ini")), c);
}

TEST(CalibrateCommandTest, PartialCalibrationPassesCurveCheck) {
    auto c = parse_config(kBase);
    c.n = 40;
    c.sigmas = {0.25};
    c.sigma_grid = false;
    c.gammas = {0.01};
    c.lowest_index = 30;
    c.out_dir = scratch_dir("cal30").string();
    std::ostringstream log;
    EXPECT_EQ(cmd_calibrate(c, log), kExitSuccess) << log.str();
    EXPECT_NE(log.str().find("curve reproduction: ok"), std::string::npos);
}

TEST(CalibrateCommandTest, FailureNamesIndex) {
    auto c = parse_config(kBase);
    c.sigmas = {0.2};
    c.sigma_grid = false;
    c.engine.enumeration_cap = 6;
    c.out_dir = scratch_dir("calfail").string();
    std::ostringstream log;
    EXPECT_EQ(cmd_calibrate(c, log), kExitNumerical);
    EXPECT_NE(log.str().find("index 4"), std::string::npos) << log.str();
}

TEST(ScanCommandTest, ByteIdenticalAcrossRuns) {
    auto c = parse_config(kBase);
    c.out_dir = scratch_dir("scan_a").string();
    std::ostringstream log;
    ASSERT_EQ(cmd_scan(c, log), kExitSuccess) << log.str();
    const auto first = read_file(fs::path(c.out_dir) / "scan.csv");
    c.out_dir = scratch_dir("scan_b").string();
    c.threads = 3;
    ASSERT_EQ(cmd_scan(c, log), kExitSuccess);
    EXPECT_EQ(read_file(fs::path(c.out_dir) / "scan.csv"), first);
}

TEST(ScanCommandTest, RowOrderAndColumns) {
    auto c = parse_config(kBase);
    c.gammas = {0.05, 0.0};
    c.gamma_list = true;
    const auto rows = run_scan(c);
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows[0].gamma, 0.05);
    EXPECT_EQ(rows[6].gamma, 0.0);
    EXPECT_EQ(rows[1].sigma, 0.1);
    const auto csv = parse_csv(scan_csv(rows));
    EXPECT_EQ(csv[0], (std::vector<std::string>{"gamma", "sigma", "i", "lnN", "stderr", "method", "sigma_cr", "status"}));
}

TEST(ScanCommandTest, SingleSigmaHasNoCriticalPoint) {
    auto c = parse_config(kBase);
    c.sigmas = {0.3};
    const auto rows = run_scan(c);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].critical);
    EXPECT_EQ(rows[0].status, "ok");
}

TEST(ScanCommandTest, SampledEngineKeepsLayout) {
    auto c = parse_config(kBase);
    c.engine.method = Method::sampled;
    c.engine.chain.samples = 500;
    c.engine.chain.burn_in = 100;
    const auto exact_rows = run_scan(parse_config(kBase));
    const auto rows = run_scan(c);
    ASSERT_EQ(rows.size(), exact_rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(rows[k].sigma, exact_rows[k].sigma);
        EXPECT_EQ(rows[k].method, Method::sampled);
        EXPECT_NEAR(rows[k].log_N, exact_rows[k].log_N, std::max(2e-3, 5.0 * rows[k].std_error));
    }
}

TEST(ScanCommandTest, SampledEngineNeedsSeed) {
    auto c = parse_config(kBase);
    c.seed.reset();
    c.engine.method = Method::sampled;
    std::ostringstream log;
    EXPECT_EQ(cmd_scan(c, log), kExitConfig);
    EXPECT_NE(log.str().find("seed"), std::string::npos);
}

TEST(ScanCommandTest, PerPointFailuresAreRecordedInRow) {
    auto c = parse_config(kBase);
    c.scan_index = 0;
    c.engine.enumeration_cap = 10;  // anchor 0 has 11 sites
    c.out_dir = scratch_dir("scanfail").string();
    std::ostringstream log;
    EXPECT_EQ(cmd_scan(c, log), kExitNumerical);
    const auto rows = parse_csv(read_file(fs::path(c.out_dir) / "scan.csv"));
    ASSERT_EQ(rows.size(), 7u);
    for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_EQ(rows[r][7].rfind("error", 0), 0u);
}

TEST(ScanCommandTest, WeakMeanReversionTracksZeroReversion) {
    // Below the transition the two regimes coincide to 1e-4.
    auto c = parse_config(kBase);
    c.n = 40;
    c.scan_index = 30;
    c.sigmas = parse_number_list("0.05:0.25:0.01");
    c.gammas = {0.0, 1e-6};
    const auto rows = run_scan(c);
    const std::size_t per = c.sigmas.size();
    for (std::size_t k = 0; k < per; ++k) EXPECT_NEAR(rows[k].log_N, rows[per + k].log_N, 1e-4);
}

TEST(ScanCommandTest, SvgHasOnePolylinePerGamma) {
    auto c = parse_config(kBase);
    c.gammas = {0.0, 0.02, 0.05};
    const auto svg = scan_svg(run_scan(c));
    std::size_t count = 0;
    for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++count;
    EXPECT_EQ(count, 3u);
}

TEST(ValidateCommandTest, DefaultBatteryPasses) {
    auto c = parse_config(kBase);
    c.validate_paths = 50000;
    c.out_dir = scratch_dir("validate").string();
    std::ostringstream out, log;
    EXPECT_EQ(cmd_validate(c, out, log), kExitSuccess) << out.str() << log.str();
    const auto report = read_file(fs::path(c.out_dir) / "validate_report.json");
    EXPECT_NE(report.find("\"passed\": true"), std::string::npos);
}

TEST(ValidateCommandTest, CouplingSignFaultIsCaught) {
    auto c = parse_config(kBase);
    c.validate_paths = 20000;
    c.inject_fault = "coupling_sign";
    const auto suites = run_validation(c);
    bool found = false;
    for (const auto& s : suites)
        if (s.name == "attraction") {
            found = true;
            EXPECT_FALSE(s.passed);
        }
    EXPECT_TRUE(found);
    EXPECT_NE(validation_report_json(c, suites).find("\"attraction\""), std::string::npos);
}

TEST(ValidateCommandTest, NeedsSeed) {
    auto c = parse_config(kBase);
    c.seed.reset();
    std::ostringstream out, log;
    EXPECT_EQ(cmd_validate(c, out, log), kExitConfig);
}

TEST(BinaryTest, MissingTauExitsWithConfigError) {
    const auto dir = scratch_dir("binary");
    std::string text = kBase;
    text.replace(text.find("tau = 0.25\n"), 11, "");
    std::ofstream(dir / "bad.ini") << text;
    const std::string cmd = std::string(LATGAS_CLI_PATH) + " calibrate " + (dir / "bad.ini").string() + " 2> " +
                            (dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), kExitConfig);
    EXPECT_NE(read_file(dir / "err.txt").find("tau"), std::string::npos);
}

TEST(BinaryTest, OverridesApply) {
    const auto dir = scratch_dir("binary_ok");
    auto c = parse_config(kBase);
    c.sigmas = {0.1};
    c.sigma_grid = false;
    std::ofstream(dir / "ok.ini") << to_config_text(c);
    const std::string cmd = std::string(LATGAS_CLI_PATH) + " calibrate " + (dir / "ok.ini").string() +
                            " --out-dir " + (dir / "out").string() + " --threads 2 --seed 5 2> /dev/null";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), kExitSuccess);
    EXPECT_TRUE(fs::exists(dir / "out" / "calibration.csv"));
    const auto eff = parse_config(read_file(dir / "out" / "effective_config.ini"));
    EXPECT_EQ(eff.threads, 2u);
    EXPECT_EQ(*eff.seed, 5u);
}

}  // namespace
}  // namespace latgas::cli
