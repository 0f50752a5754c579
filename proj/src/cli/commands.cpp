#include "latgas/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "latgas/parallel.hpp"
#include "latgas/random.hpp"
#include "output.hpp"

namespace latgas::cli {

using detail::format_number;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

const char* method_name(Method m) { return m == Method::exact ? "exact" : "sampled"; }

// Flags rows where ln N drops along sigma by more than the noise allows.
bool check_monotone(std::vector<ScanPoint*>& curve) {
    bool ok = true;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const ScanPoint& a = *curve[k - 1];
        ScanPoint& b = *curve[k];
        const double slack = 1e-9 * std::max(1.0, std::abs(a.log_N)) +
                             3.0 * std::hypot(a.std_error, b.std_error);
        if (b.log_N < a.log_N - slack) {
            b.status = "nonmonotone";
            ok = false;
        }
    }
    return ok;
}

}  // namespace

std::string calibration_csv(const CalibratedModel& model) {
    const auto residuals = curve_residuals(model);
    const std::size_t first = model.lowest_index == 0 ? 0 : model.lowest_index - 1;
    std::ostringstream out;
    out << "i,t,fwd,libor_adj,lnN1,curve_residual,curve_ok\n";
    for (std::size_t i = model.lowest_index; i < model.grid.periods(); ++i) {
        const double r = residuals[i - first];
        out << i << ',' << format_number(model.grid.time(i)) << ',' << format_number(model.curve.forward(i)) << ','
            << format_number(model.libor_adj[i]) << ',' << format_number(model.log_N1[i]) << ','
            << format_number(r, 6) << ',' << (r <= kCurveTolerance ? 1 : 0) << '\n';
    }
    return out.str();
}

int cmd_calibrate(const RunConfig& config, std::ostream& log) {
    return detail::run_guarded(log, [&] {
        if (config.sigmas.size() != 1) throw ConfigError("process.sigma", 0, "calibrate needs a single sigma");
        if (config.gammas.size() != 1) throw ConfigError("process.gamma", 0, "calibrate needs a single gamma");
        if (config.engine.method == Method::sampled) detail::require_seed(config, "for the sampled engine");
        set_thread_count(config.threads);

        const TenorGrid grid = config.grid();
        const ProcessSpec spec(config.sigmas[0], config.gammas[0]);
        const auto model = calibrate(grid, spec, config.curve(), config.engine, config.lowest_index);
        const std::string csv = calibration_csv(model);

        detail::write_text_file(config.out_dir, "effective_config.ini", to_config_text(config));
        const auto path = detail::write_text_file(config.out_dir, "calibration.csv", csv);

        double worst = 0.0;
        for (double r : curve_residuals(model)) worst = std::max(worst, r);
        const bool ok = worst <= kCurveTolerance;
        log << "wrote " << path.string() << "\n"
            << "curve reproduction: " << (ok ? "ok" : "FAILED") << " (max residual " << format_number(worst, 3)
            << ")\n";
        return ok ? kExitSuccess : kExitNumerical;
    });
}

std::vector<ScanPoint> run_scan(const RunConfig& config) {
    if (!config.scan_index_set) throw ConfigError("scan.index", 0, "missing required field for scan");
    if (config.engine.method == Method::sampled) detail::require_seed(config, "for the sampled engine");
    const std::size_t anchor = config.scan_index;
    const TenorGrid grid = config.grid();
    const YieldCurve curve = config.curve();
    const std::size_t per_gamma = config.sigmas.size();

    std::vector<ScanPoint> rows(config.gammas.size() * per_gamma);
    parallel_for(rows.size(), [&](std::size_t k) {
        ScanPoint& row = rows[k];
        row.gamma = config.gammas[k / per_gamma];
        row.sigma = config.sigmas[k % per_gamma];
        row.index = anchor;
        row.method = config.engine.method;
        try {
            EngineConfig engine = config.engine;
            if (config.seed) engine.chain.seed = derive_seed(*config.seed, k);
            const auto model = calibrate(grid, ProcessSpec(row.sigma, row.gamma), curve, engine, anchor);
            const PartitionValue v = convexity_expectation_N(model, anchor, config.phi);
            row.log_N = v.log_value;
            row.std_error = v.std_error;
            row.method = v.method;
            if (!v.reliable) row.status = "unreliable";
        } catch (const std::exception& e) {
            row.log_N = std::numeric_limits<double>::quiet_NaN();
            row.std_error = std::numeric_limits<double>::quiet_NaN();
            row.status = "error: " + one_line(e.what());
        }
    });

    for (std::size_t g = 0; g < config.gammas.size(); ++g) {
        std::vector<ScanPoint*> curve_rows;
        for (std::size_t s = 0; s < per_gamma; ++s) curve_rows.push_back(&rows[g * per_gamma + s]);
        const bool complete = std::all_of(curve_rows.begin(), curve_rows.end(),
                                          [](const ScanPoint* p) { return std::isfinite(p->log_N); });
        if (!complete) continue;
        check_monotone(curve_rows);
        if (per_gamma < 20) continue;
        std::vector<double> values;
        for (const ScanPoint* p : curve_rows) values.push_back(p->log_N);
        try {
            const auto cr = critical_volatility(config.sigmas, values);
            curve_rows[cr.grid_index]->critical = true;
        } catch (const NoTransitionDetected&) {
        } catch (const std::invalid_argument&) {
            // non-uniform sigma grid: no detection
        }
    }
    return rows;
}

std::string scan_csv(const std::vector<ScanPoint>& rows) {
    std::ostringstream out;
    out << "gamma,sigma,i,lnN,stderr,method,sigma_cr,status\n";
    for (const ScanPoint& r : rows) {
        out << format_number(r.gamma, 10) << ',' << format_number(r.sigma, 10) << ',' << r.index << ','
            << format_number(r.log_N) << ',' << format_number(r.std_error, 6) << ',' << method_name(r.method) << ','
            << (r.critical ? 1 : 0) << ',' << r.status << '\n';
    }
    return out.str();
}

std::string scan_svg(const std::vector<ScanPoint>& rows) {
    constexpr double width = 720, height = 480, left = 70, right = 150, top = 30, bottom = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const ScanPoint& r : rows) {
        if (!std::isfinite(r.log_N)) continue;
        x0 = std::min(x0, r.sigma);
        x1 = std::max(x1, r.sigma);
        y0 = std::min(y0, r.log_N);
        y1 = std::max(y1, r.log_N);
    }
    if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
        out << "<text x=\"" << format_number(px(xv), 6) << "\" y=\"" << height - bottom + 18
            << "\" text-anchor=\"middle\">" << format_number(xv, 3) << "</text>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << format_number(py(yv) + 4, 6) << "\" text-anchor=\"end\">"
            << format_number(yv, 3) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">sigma</text>\n"
        << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
        << ")\" text-anchor=\"middle\">ln N(phi)</text>\n";

    std::size_t series = 0;
    for (std::size_t k = 0; k < rows.size();) {
        std::size_t end = k;
        while (end < rows.size() && rows[end].gamma == rows[k].gamma) ++end;
        const char* color = colors[series % std::size(colors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t r = k; r < end; ++r)
            if (std::isfinite(rows[r].log_N))
                out << format_number(px(rows[r].sigma), 6) << ',' << format_number(py(rows[r].log_N), 6) << ' ';
        out << "\"/>\n";
        const double ly = top + 16 + 18 * static_cast<double>(series);
        out << "<line x1=\"" << width - right + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << width - right + 36
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << width - right + 42 << "\" y=\"" << ly << "\">gamma = "
            << format_number(rows[k].gamma, 6) << "</text>\n";
        ++series;
        k = end;
    }
    out << "</svg>\n";
    return out.str();
}

int cmd_scan(const RunConfig& config, std::ostream& log) {
    return detail::run_guarded(log, [&] {
        set_thread_count(config.threads);
        const auto rows = run_scan(config);
        detail::write_text_file(config.out_dir, "effective_config.ini", to_config_text(config));
        const auto path = detail::write_text_file(config.out_dir, "scan.csv", scan_csv(rows));
        log << "wrote " << path.string() << "\n";
        if (config.svg) log << "wrote " << detail::write_text_file(config.out_dir, "scan.svg", scan_svg(rows)).string() << "\n";

        std::size_t failed = 0;
        for (const ScanPoint& r : rows) {
            if (r.status == "ok") continue;
            ++failed;
            log << "gamma=" << format_number(r.gamma, 10) << " sigma=" << format_number(r.sigma, 10) << ": "
                << r.status << "\n";
        }
        for (const ScanPoint& r : rows)
            if (r.critical)
                log << "gamma=" << format_number(r.gamma, 10) << ": sigma_cr = " << format_number(r.sigma, 10) << "\n";
        return failed == 0 ? kExitSuccess : kExitNumerical;
    });
}

}  // namespace latgas::cli
