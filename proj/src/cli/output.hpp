#pragma once

// Helpers shared by the command implementations.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "latgas/cli/commands.hpp"
#include "latgas/errors.hpp"

namespace latgas::cli::detail {

inline std::string format_number(double v, int digits = 15) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::filesystem::path write_text_file(const std::string& dir, const std::string& name,
                                             const std::string& text) {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    const auto path = root / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
    return path;
}

/// Maps exceptions to exit codes: config problems 2, everything else 1.
template <class Fn>
int run_guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

inline void require_seed(const RunConfig& config, const char* why) {
    if (!config.seed) throw ConfigError("run.seed", 0, std::string("an explicit seed is required ") + why);
}

}  // namespace latgas::cli::detail
