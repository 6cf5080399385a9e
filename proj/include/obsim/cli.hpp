#pragma once

// Command-line front end. Subcommands:
//   steady      steady density matrix as JSON
//   spectrum    weak-probe response over a probe-detuning grid (CSV)
//   curve       input-output curve (CSV) + turning points / thresholds (JSON)
//   hysteresis  up-then-down input ramp scan (CSV)
//   sweep       parameter sweep summary (CSV, deterministic bytes) + sidecar
//   preset      list canonical parameter families or emit one as a config
//
// Data goes to stdout or to --out files; every diagnostic goes to stderr.
// Exit codes: 0 success, 2 configuration/usage error, 3 solver
// non-convergence, 4 I/O error.

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "obsim/config.hpp"
#include "obsim/csv.hpp"
#include "obsim/integrate.hpp"
#include "obsim/version.hpp"
#include "obsim/weak_probe.hpp"

namespace obsim {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const std::ios_base::failure*>(&e)) return 4;
    if (dynamic_cast<const ConvergenceError*>(&e)) return 3;
    if (dynamic_cast<const IntegrationError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    if (dynamic_cast<const std::out_of_range*>(&e)) return 2;
    return 1;
}

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed on '" + path + "'");
}

inline void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_file(out_path, content);
}

inline std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// "<stem>.csv" -> "<stem>.json"; any other name just gets ".json" appended
inline std::string sidecar_path(const std::string& out) {
    if (out.size() >= 4 && out.substr(out.size() - 4) == ".csv")
        return out.substr(0, out.size() - 4) + ".json";
    return out + ".json";
}

inline nlohmann::json config_json(const RunConfig& c) {
    nlohmann::json j;
    j["atom"] = {{"gamma21", c.gamma21},     {"gamma23", c.gamma23},
                 {"gamma31", c.gamma31},     {"gamma_d21", c.gamma_d21},
                 {"gamma_d23", c.gamma_d23}, {"eps_p", c.eps_p},
                 {"eps_c", c.eps_c},         {"delta_p", c.delta_p},
                 {"delta_c", c.delta_c}};
    j["drive"] = {{"omega_p", {c.omega_p.real(), c.omega_p.imag()}},
                  {"omega_c", {c.omega_c.real(), c.omega_c.imag()}}};
    j["cavity"] = {{"C", c.C},
                   {"T", c.T},
                   {"theta", c.theta},
                   {"mode", c.mode == CavityMode::mean_field ? "mean_field" : "z_resolved"},
                   {"alpha_l", c.alpha_l},
                   {"n_steps", c.n_steps}};
    j["grid"] = {{"x_min", c.x_min},
                 {"x_max", c.x_max},
                 {"x_count", c.x_count},
                 {"delta_p_min", c.delta_p_min},
                 {"delta_p_max", c.delta_p_max},
                 {"delta_p_count", c.delta_p_count}};
    j["hysteresis"] = {
        {"y_min", c.y_min}, {"y_max", c.y_max}, {"y_step", c.y_step}, {"x_init", c.x_init}};
    j["sweep"] = {{"name", c.name},
                  {"preset", c.preset},
                  {"emit_curves", c.emit_curves},
                  {"workers", c.workers}};
    auto axes = nlohmann::json::array();
    for (const auto& ax : c.axes) axes.push_back({{"path", ax.path}, {"values", ax.values}});
    j["sweep"]["axes"] = axes;
    j["output"] = {{"out", c.out}};
    return j;
}

inline nlohmann::json sidecar_base(const std::string& command, const RunConfig& cfg) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["timestamp"] = iso8601_utc_now();
    j["command"] = command;
    j["config"] = config_json(cfg);
    return j;
}

inline int resolve_workers(const RunConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("OBSIM_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline int cmd_steady(const RunConfig& cfg) {
    const SteadyInfo info = solve_steady(cfg.atom(), cfg.drive());
    const DensityState& st = info.state;
    nlohmann::json j;
    j["rho11"] = st.rho11();
    j["rho22"] = st.rho22();
    j["rho33"] = st.rho33();
    j["rho21"] = {st.rho21.real(), st.rho21.imag()};
    j["rho23"] = {st.rho23.real(), st.rho23.imag()};
    j["rho31"] = {st.rho31.real(), st.rho31.imag()};
    j["d21"] = st.d21;
    j["d23"] = st.d23;
    j["residual"] = info.residual;
    j["degenerate_family"] = info.degenerate_family;
    emit(cfg.out, j.dump(2) + "\n");
    return 0;
}

inline int cmd_spectrum(const RunConfig& cfg) {
    const std::vector<double> grid = cfg.delta_p_grid();
    std::vector<cplx> response;
    response.reserve(grid.size());
    AtomParams at = cfg.atom();
    for (const double dp : grid) {
        at.delta_p = dp;
        response.push_back(weak_probe_coherence(at, cfg.omega_c));
    }
    emit(cfg.out, spectrum_csv(grid, response));
    return 0;
}

inline nlohmann::json curve_report(const OBCurve& curve) {
    nlohmann::json j;
    auto tps = nlohmann::json::array();
    for (const auto& tp : curve.turning_points)
        tps.push_back({{"x", tp.x}, {"y_mag", tp.y_mag}, {"is_max", tp.is_max}});
    j["turning_points"] = tps;
    auto dps = nlohmann::json::array();
    for (const auto& tp : curve.degenerate_points)
        dps.push_back({{"x", tp.x}, {"y_mag", tp.y_mag}});
    j["degenerate_points"] = dps;
    auto thr = nlohmann::json::array();
    for (const auto& t : curve.thresholds)
        thr.push_back({{"y_up", t.y_up}, {"y_down", t.y_down}});
    j["thresholds"] = thr;
    j["branch_stable"] = curve.branch_stable;
    return j;
}

inline int cmd_curve(const RunConfig& cfg) {
    if (cfg.out.empty())
        throw ConfigError("curve: --out (or [output] out) is required for the CSV + sidecar");
    const OBCurve curve =
        trace_ob_curve(cfg.atom(), cfg.omega_c, cfg.cavity(), cfg.x_grid().values());
    write_file(cfg.out, curve_csv(curve));
    nlohmann::json side = sidecar_base("curve", cfg);
    side["curve"] = curve_report(curve);
    write_file(sidecar_path(cfg.out), side.dump(2) + "\n");
    return 0;
}

inline int cmd_hysteresis(const RunConfig& cfg) {
    const std::vector<double> ramp = cfg.ramp_up();
    const AtomParams at = cfg.atom();
    const CavityParams cav = cfg.cavity();
    const auto up = hysteresis_scan(at, cfg.omega_c, cav, ramp, cfg.x_init);
    std::vector<double> ramp_down(ramp.rbegin(), ramp.rend());
    const auto down = hysteresis_scan(at, cfg.omega_c, cav, ramp_down, up.back().x);
    emit(cfg.out, hysteresis_csv(up, down));
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg) {
    if (cfg.out.empty())
        throw ConfigError("sweep: --out (or [output] out) is required for the summary CSV");
    const SweepSpec spec = cfg.sweep_spec();
    const int workers = resolve_workers(cfg);
    const SweepResult result = run_sweep(spec, workers);
    write_file(cfg.out, sweep_summary_csv(result));

    nlohmann::json side = sidecar_base("sweep", cfg);
    side["sweep"] = {{"name", spec.name}, {"workers", workers}, {"points", result.records.size()}};
    auto recs = nlohmann::json::array();
    const std::string stem = cfg.out.size() >= 4 && cfg.out.substr(cfg.out.size() - 4) == ".csv"
                                 ? cfg.out.substr(0, cfg.out.size() - 4)
                                 : cfg.out;
    int failures = 0;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const SweepRecord& r = result.records[i];
        nlohmann::json jr;
        jr["index"] = i;
        auto axes = nlohmann::json::array();
        for (std::size_t a = 0; a < r.axis_values.size(); ++a)
            axes.push_back({{"path", spec.axes[a].path}, {"value", r.axis_values[a]}});
        jr["axes"] = axes;
        jr["ok"] = r.ok;
        if (!r.ok) {
            jr["error"] = r.error;
            ++failures;
        } else {
            jr["turning_points"] = r.turning_points;
            auto thr = nlohmann::json::array();
            for (const auto& t : r.thresholds)
                thr.push_back({{"y_up", t.y_up}, {"y_down", t.y_down}});
            jr["thresholds"] = thr;
        }
        if (spec.emit_curves && r.ok) {
            char tag[16];
            std::snprintf(tag, sizeof tag, "_point%03zu", i);
            const std::string path = stem + tag + ".csv";
            write_file(path, curve_csv(r.curve));
            jr["curve_file"] = path;
        }
        recs.push_back(std::move(jr));
    }
    side["sweep"]["records"] = recs;
    write_file(sidecar_path(cfg.out), side.dump(2) + "\n");
    if (failures > 0)
        std::cerr << "sweep: " << failures << " of " << result.records.size()
                  << " points failed to converge (recorded in the sidecar)\n";
    return 0;
}

inline int cmd_preset(const std::string& name, const RunConfig& cli_overrides_out) {
    if (name.empty()) {
        std::string list;
        for (const auto& n : preset_names()) list += n + "\n";
        emit(cli_overrides_out.out, list);
        return 0;
    }
    RunConfig cfg = preset_config(name);
    emit(cli_overrides_out.out, emit_config(cfg));
    return 0;
}

} // namespace detail

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"three-level Lambda medium in a unidirectional ring cavity: steady states, "
                 "weak-probe spectra, input-output curves, hysteresis scans, parameter sweeps"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_flag;
    int workers_flag = 0;
    app.add_option("--config", config_path, "configuration file (flat key = value with sections)");
    app.add_option("--set", overrides, "override a config value: section.key=value")
        ->take_all()
        ->expected(-1);
    app.add_option("--out", out_flag, "output path (CSV/JSON); default stdout where allowed");
    app.add_option("--workers", workers_flag, "sweep worker threads (default: OBSIM_WORKERS or hardware)");

    auto* steady = app.add_subcommand("steady", "steady density matrix as JSON");
    auto* spectrum = app.add_subcommand("spectrum", "weak-probe response over the delta_p grid");
    auto* curve = app.add_subcommand("curve", "input-output curve CSV + turning-point sidecar");
    auto* hysteresis = app.add_subcommand("hysteresis", "up-then-down input ramp scan");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep summary (deterministic CSV)");
    auto* preset = app.add_subcommand("preset", "list canonical families or emit one as a config");
    std::string preset_name;
    preset->add_option("name", preset_name, "family to emit (omit to list)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty())
            cfg = parse_config(detail::read_file(config_path), config_path);
        for (const auto& ov : overrides) apply_override(cfg, ov);
        if (!out_flag.empty()) cfg.out = out_flag;
        if (workers_flag > 0) cfg.workers = workers_flag;

        if (steady->parsed()) return detail::cmd_steady(cfg);
        if (spectrum->parsed()) return detail::cmd_spectrum(cfg);
        if (curve->parsed()) return detail::cmd_curve(cfg);
        if (hysteresis->parsed()) return detail::cmd_hysteresis(cfg);
        if (sweep->parsed()) return detail::cmd_sweep(cfg);
        if (preset->parsed()) return detail::cmd_preset(preset_name, cfg);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace obsim
