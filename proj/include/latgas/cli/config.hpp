#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "latgas/calibration.hpp"

namespace latgas::cli {

/// Config problems carry the offending field (and line, when known).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, std::size_t line, const std::string& message);

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_;
};

/// Everything a run needs. Parsed from an INI-style text file:
///
///     [grid]     n, tau
///     [process]  sigma | sigma_grid, gamma | gamma_list
///     [curve]    flat_forward | discounts
///     [engine]   method, enumeration_cap, burn_in, samples, thinning, chains, path_nodes
///     [scan]     index, phi
///     [calibrate] lowest_index
///     [output]   dir, svg
///     [run]      seed, threads
///     [validate] n, paths, inject_fault
///
/// Lists are comma separated; grids may also be written start:stop:step.
struct RunConfig {
    std::size_t n = 0;
    double tau = 0.0;

    std::vector<double> sigmas;
    bool sigma_grid = false;
    std::vector<double> gammas;
    bool gamma_list = false;

    std::optional<double> flat_forward;
    std::vector<double> discounts;

    EngineConfig engine{};

    std::size_t scan_index = 0;
    bool scan_index_set = false;
    double phi = 1.0;

    std::size_t lowest_index = 0;

    std::string out_dir = ".";
    bool svg = false;

    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    std::size_t validate_n = 12;
    std::size_t validate_paths = 200000;
    std::string inject_fault;

    YieldCurve curve() const;
    TenorGrid grid() const { return TenorGrid(n, tau); }

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Effective-config text; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

/// Parses "a:b:step" or "v1, v2, ..." into a list of doubles.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace latgas::cli
