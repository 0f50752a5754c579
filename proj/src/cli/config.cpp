#include "latgas/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace latgas::cli {

ConfigError::ConfigError(std::string field, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "config error at line " + std::to_string(line) + ", field '" + field +
                                        "': " + message
                                  : "config error, field '" + field + "': " + message),
      field_(std::move(field)),
      line_(line) {}

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

struct Entry {
    std::string value;
    std::size_t line;
};

using Table = std::map<std::string, Entry>;  // "section.key" -> value

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "grid.n",           "grid.tau",          "process.sigma",        "process.sigma_grid",
        "process.gamma",    "process.gamma_list", "curve.flat_forward",  "curve.discounts",
        "engine.method",    "engine.enumeration_cap", "engine.burn_in",  "engine.samples",
        "engine.thinning",  "engine.chains",     "engine.path_nodes",    "scan.index",
        "scan.phi",         "calibrate.lowest_index", "output.dir",      "output.svg",
        "run.seed",         "run.threads",       "validate.n",           "validate.paths",
        "validate.inject_fault"};
    return keys;
}

Table tokenize(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line, line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line, line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string full = section.empty() ? key : section + "." + key;
        if (section.empty()) throw ConfigError(key, line_no, "key outside of any section");
        if (!known_keys().contains(full)) throw ConfigError(full, line_no, "unknown key");
        if (table.contains(full)) throw ConfigError(full, line_no, "duplicate key");
        table[full] = Entry{trim(line.substr(eq + 1)), line_no};
    }
    return table;
}

double to_double(const std::string& field, const Entry& e) {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ConfigError(field, e.line, "expected a number, got '" + e.value + "'");
    return v;
}

std::uint64_t to_uint(const std::string& field, const Entry& e) {
    std::uint64_t v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ConfigError(field, e.line, "expected a non-negative integer, got '" + e.value + "'");
    return v;
}

bool to_bool(const std::string& field, const Entry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError(field, e.line, "expected true or false");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) out += ", ";
        out += fmt(xs[k]);
    }
    return out;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
    const auto parse_one = [](const std::string& s) {
        const std::string t = trim(s);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
            throw std::invalid_argument("bad number '" + t + "'");
        return v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
        const double a = parse_one(parts[0]), b = parse_one(parts[1]), step = parse_one(parts[2]);
        if (!(step > 0.0) || b < a) throw std::invalid_argument("range needs step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::llround((b - a) / step)) + 1;
        for (std::size_t k = 0; k < count; ++k)
            out.push_back(std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_one(item));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

RunConfig parse_config(const std::string& text) {
    const Table t = tokenize(text);
    RunConfig c;
    auto get = [&](const std::string& key) -> const Entry* {
        const auto it = t.find(key);
        return it == t.end() ? nullptr : &it->second;
    };
    auto require = [&](const std::string& key) -> const Entry& {
        const Entry* e = get(key);
        if (!e) throw ConfigError(key, 0, "missing required field");
        return *e;
    };
    auto list = [&](const std::string& key, const Entry& e) {
        try {
            return parse_number_list(e.value);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(key, e.line, ex.what());
        }
    };

    {
        const Entry& e = require("grid.n");
        c.n = to_uint("grid.n", e);
        if (c.n < 1) throw ConfigError("grid.n", e.line, "must be >= 1");
    }
    {
        const Entry& e = require("grid.tau");
        c.tau = to_double("grid.tau", e);
        if (!(c.tau > 0.0)) throw ConfigError("grid.tau", e.line, "must be > 0");
    }

    const Entry* sigma = get("process.sigma");
    const Entry* sigma_grid = get("process.sigma_grid");
    if ((sigma != nullptr) == (sigma_grid != nullptr))
        throw ConfigError("process.sigma", sigma ? sigma->line : 0, "give exactly one of sigma or sigma_grid");
    if (sigma) {
        c.sigmas = {to_double("process.sigma", *sigma)};
    } else {
        c.sigmas = list("process.sigma_grid", *sigma_grid);
        c.sigma_grid = true;
        for (std::size_t k = 1; k < c.sigmas.size(); ++k)
            if (!(c.sigmas[k] > c.sigmas[k - 1]))
                throw ConfigError("process.sigma_grid", sigma_grid->line, "must be strictly increasing");
    }
    for (double s : c.sigmas)
        if (s < 0.0) throw ConfigError(sigma ? "process.sigma" : "process.sigma_grid", 0, "must be >= 0");

    const Entry* gamma = get("process.gamma");
    const Entry* gamma_list = get("process.gamma_list");
    if ((gamma != nullptr) == (gamma_list != nullptr))
        throw ConfigError("process.gamma", gamma ? gamma->line : 0, "give exactly one of gamma or gamma_list");
    if (gamma) {
        c.gammas = {to_double("process.gamma", *gamma)};
    } else {
        c.gammas = list("process.gamma_list", *gamma_list);
        c.gamma_list = true;
    }
    for (double g : c.gammas)
        if (g < 0.0) throw ConfigError(gamma ? "process.gamma" : "process.gamma_list", 0, "must be >= 0");

    const Entry* flat = get("curve.flat_forward");
    const Entry* disc = get("curve.discounts");
    if ((flat != nullptr) == (disc != nullptr))
        throw ConfigError("curve", flat ? flat->line : 0, "give exactly one of flat_forward or discounts");
    if (flat) {
        c.flat_forward = to_double("curve.flat_forward", *flat);
        if (!(*c.flat_forward > 0.0)) throw ConfigError("curve.flat_forward", flat->line, "must be > 0");
    } else {
        c.discounts = list("curve.discounts", *disc);
        if (c.discounts.size() != c.n + 1)
            throw ConfigError("curve.discounts", disc->line, "expected n + 1 = " + std::to_string(c.n + 1) + " values");
    }

    if (const Entry* e = get("engine.method")) {
        if (e->value == "exact")
            c.engine.method = Method::exact;
        else if (e->value == "sampled")
            c.engine.method = Method::sampled;
        else
            throw ConfigError("engine.method", e->line, "expected exact or sampled");
    }
    if (const Entry* e = get("engine.enumeration_cap")) {
        c.engine.enumeration_cap = to_uint("engine.enumeration_cap", *e);
        if (c.engine.enumeration_cap > kMaxEnumerableSites)
            throw ConfigError("engine.enumeration_cap", e->line,
                              "must be <= " + std::to_string(kMaxEnumerableSites));
    }
    if (const Entry* e = get("engine.burn_in")) c.engine.chain.burn_in = to_uint("engine.burn_in", *e);
    if (const Entry* e = get("engine.samples")) c.engine.chain.samples = to_uint("engine.samples", *e);
    if (const Entry* e = get("engine.thinning")) c.engine.chain.thinning = to_uint("engine.thinning", *e);
    if (const Entry* e = get("engine.chains")) c.engine.chain.chains = to_uint("engine.chains", *e);
    if (const Entry* e = get("engine.path_nodes")) {
        c.engine.path_nodes = to_uint("engine.path_nodes", *e);
        if (c.engine.path_nodes < 8) throw ConfigError("engine.path_nodes", e->line, "must be >= 8");
    }
    if (c.engine.method == Method::sampled) {
        try {
            c.engine.chain.validate();
        } catch (const std::invalid_argument& ex) {
            throw ConfigError("engine", 0, ex.what());
        }
    }

    if (const Entry* e = get("scan.index")) {
        c.scan_index = to_uint("scan.index", *e);
        c.scan_index_set = true;
        if (c.scan_index >= c.n) throw ConfigError("scan.index", e->line, "must be < n");
    }
    if (const Entry* e = get("scan.phi")) c.phi = to_double("scan.phi", *e);
    if (const Entry* e = get("calibrate.lowest_index")) {
        c.lowest_index = to_uint("calibrate.lowest_index", *e);
        if (c.lowest_index >= c.n) throw ConfigError("calibrate.lowest_index", e->line, "must be < n");
    }
    if (const Entry* e = get("output.dir")) c.out_dir = e->value;
    if (const Entry* e = get("output.svg")) c.svg = to_bool("output.svg", *e);
    if (const Entry* e = get("run.seed")) c.seed = to_uint("run.seed", *e);
    if (const Entry* e = get("run.threads")) c.threads = static_cast<unsigned>(to_uint("run.threads", *e));
    if (const Entry* e = get("validate.n")) {
        c.validate_n = to_uint("validate.n", *e);
        if (c.validate_n < 2 || c.validate_n > 20) throw ConfigError("validate.n", e->line, "must be in [2, 20]");
    }
    if (const Entry* e = get("validate.paths")) {
        c.validate_paths = to_uint("validate.paths", *e);
        if (c.validate_paths < 1000) throw ConfigError("validate.paths", e->line, "must be >= 1000");
    }
    if (const Entry* e = get("validate.inject_fault")) {
        if (e->value != "none" && e->value != "coupling_sign")
            throw ConfigError("validate.inject_fault", e->line, "expected none or coupling_sign");
        c.inject_fault = e->value == "none" ? "" : e->value;
    }
    if (c.seed) c.engine.chain.seed = *c.seed;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", 0, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

YieldCurve RunConfig::curve() const {
    if (flat_forward) return YieldCurve::flat_forward(*flat_forward, grid());
    return YieldCurve(discounts, tau);
}

std::string to_config_text(const RunConfig& c) {
    std::ostringstream out;
    out << "[grid]\nn = " << c.n << "\ntau = " << fmt(c.tau) << "\n\n[process]\n";
    if (c.sigma_grid)
        out << "sigma_grid = " << join(c.sigmas) << "\n";
    else
        out << "sigma = " << fmt(c.sigmas.at(0)) << "\n";
    if (c.gamma_list)
        out << "gamma_list = " << join(c.gammas) << "\n";
    else
        out << "gamma = " << fmt(c.gammas.at(0)) << "\n";
    out << "\n[curve]\n";
    if (c.flat_forward)
        out << "flat_forward = " << fmt(*c.flat_forward) << "\n";
    else
        out << "discounts = " << join(c.discounts) << "\n";
    out << "\n[engine]\nmethod = " << (c.engine.method == Method::exact ? "exact" : "sampled")
        << "\nenumeration_cap = " << c.engine.enumeration_cap << "\nburn_in = " << c.engine.chain.burn_in
        << "\nsamples = " << c.engine.chain.samples << "\nthinning = " << c.engine.chain.thinning
        << "\nchains = " << c.engine.chain.chains << "\npath_nodes = " << c.engine.path_nodes << "\n";
    out << "\n[scan]\n";
    if (c.scan_index_set) out << "index = " << c.scan_index << "\n";
    out << "phi = " << fmt(c.phi) << "\n";
    out << "\n[calibrate]\nlowest_index = " << c.lowest_index << "\n";
    out << "\n[output]\ndir = " << c.out_dir << "\nsvg = " << (c.svg ? "true" : "false") << "\n";
    out << "\n[run]\n";
    if (c.seed) out << "seed = " << *c.seed << "\n";
    out << "threads = " << c.threads << "\n";
    out << "\n[validate]\nn = " << c.validate_n << "\npaths = " << c.validate_paths
        << "\ninject_fault = " << (c.inject_fault.empty() ? "none" : c.inject_fault) << "\n";
    return out.str();
}

}  // namespace latgas::cli
