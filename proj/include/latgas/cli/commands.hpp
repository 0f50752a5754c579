#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "latgas/cli/config.hpp"

namespace latgas::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

// Tolerance behind the curve_ok column and the calibration battery.
inline constexpr double kCurveTolerance = 1e-10;

struct ScanPoint {
    double gamma = 0.0;
    double sigma = 0.0;
    std::size_t index = 0;
    double log_N = 0.0;
    double std_error = 0.0;
    Method method = Method::exact;
    bool critical = false;
    std::string status = "ok";  ///< "ok", or the failure message for this point
};

/// Rows in (gamma, sigma) order as listed in the config.
std::vector<ScanPoint> run_scan(const RunConfig& config);

std::string calibration_csv(const CalibratedModel& model);
std::string scan_csv(const std::vector<ScanPoint>& rows);
std::string scan_svg(const std::vector<ScanPoint>& rows);

/// The commands write their files below config.out_dir, report progress and
/// errors to `log`, and return a process exit code.
int cmd_calibrate(const RunConfig& config, std::ostream& log);
int cmd_scan(const RunConfig& config, std::ostream& log);

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs every invariant suite; config.inject_fault == "coupling_sign" flips the
/// sign of the gas couplings to check that the battery notices.
std::vector<SuiteResult> run_validation(const RunConfig& config);
std::string validation_report_json(const RunConfig& config, const std::vector<SuiteResult>& suites);
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace latgas::cli
