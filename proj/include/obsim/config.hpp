#pragma once

// Run configuration: a flat key = value text format with [section] headers.
//
//   - '#' starts a comment (full line or trailing); blank lines are ignored.
//   - sections: [atom] [drive] [cavity] [grid] [hysteresis] [sweep] [output]
//   - complex values are written "re,im"; a bare real means imaginary part 0.
//   - sweep axes: axisN = <parameter-path> : v1 v2 v3 ...   (N = 1..4)
//   - unknown sections and keys are hard errors, so typos cannot silently
//     fall back to defaults.
//
// Every parameter defaults to the shared figure-preset base (gamma21 =
// gamma23 = 1, gamma31 = 0.025, NDD off, resonant fields, C = 150, T = 0.01,
// theta = 0, x grid [0, 28] x 1401). emit() materializes every value, so
// parse(emit(cfg)) reproduces cfg exactly.

#include <charconv>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "obsim/atom.hpp"
#include "obsim/cavity.hpp"
#include "obsim/sweep.hpp"

namespace obsim {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
    // [atom]
    double gamma21 = 1.0, gamma23 = 1.0, gamma31 = 0.025;
    double gamma_d21 = 0.0, gamma_d23 = 0.0;
    double eps_p = 0.0, eps_c = 0.0;
    double delta_p = 0.0, delta_c = 0.0;
    // [drive]
    cplx omega_p{1.0, 0.0};
    cplx omega_c{2.0, 0.0};
    // [cavity]
    double C = 150.0, T = 0.01, theta = 0.0;
    CavityMode mode = CavityMode::mean_field;
    double alpha_l = 1e-3;
    int n_steps = 32;
    // [grid]
    double x_min = 0.0, x_max = 28.0;
    int x_count = 1401;
    double delta_p_min = -5.0, delta_p_max = 5.0;
    int delta_p_count = 2001;
    // [hysteresis]
    double y_min = 0.0, y_max = 30.0, y_step = 0.01, x_init = 0.0;
    // [sweep]
    std::string name = "custom";
    std::string preset;          // when set, sweep uses the canonical preset base
    bool emit_curves = false;
    int workers = 0;             // 0: resolve from environment / hardware
    std::vector<SweepAxis> axes; // at most 4
    // [output]
    std::string out;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    AtomParams atom() const {
        AtomParams a;
        a.gamma21 = gamma21;
        a.gamma23 = gamma23;
        a.gamma31 = gamma31;
        a.gammaD21 = gamma_d21;
        a.gammaD23 = gamma_d23;
        a.eps_p = eps_p;
        a.eps_c = eps_c;
        a.delta_p = delta_p;
        a.delta_c = delta_c;
        return a;
    }
    Drive drive() const { return Drive{omega_p, omega_c}; }
    CavityParams cavity() const {
        CavityParams c;
        c.C = C;
        c.T = T;
        c.theta = theta;
        c.mode = mode;
        c.alphaL = alpha_l;
        c.n_steps = n_steps;
        return c;
    }
    GridSpec x_grid() const { return GridSpec{x_min, x_max, x_count}; }
    std::vector<double> delta_p_grid() const {
        return GridSpec{delta_p_min, delta_p_max, delta_p_count}.values();
    }
    std::vector<double> ramp_up() const {
        if (!(y_step > 0.0)) throw ConfigError("hysteresis: y_step must be > 0");
        if (!(y_max > y_min)) throw ConfigError("hysteresis: need y_max > y_min");
        std::vector<double> r;
        const int n = static_cast<int>((y_max - y_min) / y_step + 1e-9) + 1;
        r.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) r.push_back(y_min + i * y_step);
        return r;
    }
    SweepBase sweep_base() const { return SweepBase{atom(), omega_c, cavity(), x_grid()}; }
    SweepSpec sweep_spec() const {
        SweepSpec spec;
        if (!preset.empty()) {
            spec = figure_preset(preset); // canonical base; sections do not apply
            if (!axes.empty()) spec.axes = axes;
            spec.emit_curves = emit_curves;
            return spec;
        }
        if (axes.empty())
            throw ConfigError("sweep: configure [sweep] axis1..axis4 or preset");
        spec.name = name;
        spec.base = sweep_base();
        spec.axes = axes;
        spec.emit_curves = emit_curves;
        return spec;
    }
};

namespace detail {

inline std::string cfg_trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double cfg_double(const std::string& v, const std::string& where) {
    const char* p = v.c_str();
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p || *end != '\0')
        throw ConfigError(where + ": '" + v + "' is not a number");
    return x;
}

inline int cfg_int(const std::string& v, const std::string& where) {
    const double x = cfg_double(v, where);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError(where + ": '" + v + "' is not an integer");
    return i;
}

inline bool cfg_bool(const std::string& v, const std::string& where) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError(where + ": '" + v + "' is not a boolean (0/1/true/false)");
}

inline cplx cfg_complex(const std::string& v, const std::string& where) {
    const std::size_t comma = v.find(',');
    if (comma == std::string::npos) return cplx{cfg_double(v, where), 0.0};
    return cplx{cfg_double(cfg_trim(v.substr(0, comma)), where),
                cfg_double(cfg_trim(v.substr(comma + 1)), where)};
}

inline SweepAxis cfg_axis(const std::string& v, const std::string& where) {
    const std::size_t colon = v.find(':');
    if (colon == std::string::npos)
        throw ConfigError(where + ": expected '<parameter-path> : v1 v2 ...'");
    SweepAxis ax;
    ax.path = cfg_trim(v.substr(0, colon));
    try {
        SweepBase probe;
        set_param(probe, ax.path, 0.0); // rejects unknown paths with the valid list
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    std::istringstream vals(v.substr(colon + 1));
    std::string tok;
    while (vals >> tok) ax.values.push_back(cfg_double(tok, where));
    if (ax.values.empty()) throw ConfigError(where + ": axis has no values");
    return ax;
}

// shortest exact decimal form (round-trips the double bit pattern)
inline std::string cfg_num(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string cfg_cplx(cplx v) { return cfg_num(v.real()) + "," + cfg_num(v.imag()); }

inline void cfg_assign(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value, const std::string& where) {
    const std::string id = section + "." + key;
    if (section == "atom") {
        if (key == "gamma21") cfg.gamma21 = cfg_double(value, where);
        else if (key == "gamma23") cfg.gamma23 = cfg_double(value, where);
        else if (key == "gamma31") cfg.gamma31 = cfg_double(value, where);
        else if (key == "gamma_d21") cfg.gamma_d21 = cfg_double(value, where);
        else if (key == "gamma_d23") cfg.gamma_d23 = cfg_double(value, where);
        else if (key == "eps_p") cfg.eps_p = cfg_double(value, where);
        else if (key == "eps_c") cfg.eps_c = cfg_double(value, where);
        else if (key == "delta_p") cfg.delta_p = cfg_double(value, where);
        else if (key == "delta_c") cfg.delta_c = cfg_double(value, where);
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "drive") {
        if (key == "omega_p") cfg.omega_p = cfg_complex(value, where);
        else if (key == "omega_c") cfg.omega_c = cfg_complex(value, where);
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "cavity") {
        if (key == "C") cfg.C = cfg_double(value, where);
        else if (key == "T") cfg.T = cfg_double(value, where);
        else if (key == "theta") cfg.theta = cfg_double(value, where);
        else if (key == "alpha_l") cfg.alpha_l = cfg_double(value, where);
        else if (key == "n_steps") cfg.n_steps = cfg_int(value, where);
        else if (key == "mode") {
            if (value == "mean_field") cfg.mode = CavityMode::mean_field;
            else if (value == "z_resolved") cfg.mode = CavityMode::z_resolved;
            else throw ConfigError(where + ": mode must be mean_field or z_resolved");
        } else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "grid") {
        if (key == "x_min") cfg.x_min = cfg_double(value, where);
        else if (key == "x_max") cfg.x_max = cfg_double(value, where);
        else if (key == "x_count") cfg.x_count = cfg_int(value, where);
        else if (key == "delta_p_min") cfg.delta_p_min = cfg_double(value, where);
        else if (key == "delta_p_max") cfg.delta_p_max = cfg_double(value, where);
        else if (key == "delta_p_count") cfg.delta_p_count = cfg_int(value, where);
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "hysteresis") {
        if (key == "y_min") cfg.y_min = cfg_double(value, where);
        else if (key == "y_max") cfg.y_max = cfg_double(value, where);
        else if (key == "y_step") cfg.y_step = cfg_double(value, where);
        else if (key == "x_init") cfg.x_init = cfg_double(value, where);
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "sweep") {
        if (key == "name") cfg.name = value;
        else if (key == "preset") cfg.preset = value;
        else if (key == "emit_curves") cfg.emit_curves = cfg_bool(value, where);
        else if (key == "workers") cfg.workers = cfg_int(value, where);
        else if (key == "axis1" || key == "axis2" || key == "axis3" || key == "axis4") {
            const std::size_t slot = static_cast<std::size_t>(key[4] - '1');
            if (slot > cfg.axes.size())
                throw ConfigError(where + ": " + key + " given before axis" +
                                  std::to_string(slot));
            const SweepAxis ax = cfg_axis(value, where);
            if (slot == cfg.axes.size()) cfg.axes.push_back(ax);
            else cfg.axes[slot] = ax;
        } else throw ConfigError(where + ": unknown key '" + id + "'");
    } else if (section == "output") {
        if (key == "out") cfg.out = value;
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } else {
        throw ConfigError(where + ": unknown section [" + section + "]");
    }
}

} // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& origin = "config") {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        const std::size_t hash = raw.find('#');
        std::string line = detail::cfg_trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = detail::cfg_trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::cfg_trim(line.substr(0, eq));
        const std::string value = detail::cfg_trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty())
            throw ConfigError(where + ": key '" + key + "' outside any [section]");
        detail::cfg_assign(cfg, section, key, value, where);
    }
    return cfg;
}

// "section.key=value" command-line override, same vocabulary as the file.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set: expected section.key=value, got '" + assignment + "'");
    const std::string path = detail::cfg_trim(assignment.substr(0, eq));
    const std::string value = detail::cfg_trim(assignment.substr(eq + 1));
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError("--set: expected section.key=value, got '" + assignment + "'");
    detail::cfg_assign(cfg, path.substr(0, dot), path.substr(dot + 1), value,
                       "--set " + assignment);
}

inline std::string emit_config(const RunConfig& cfg) {
    using detail::cfg_num;
    std::string s;
    s += "[atom]\n";
    s += "gamma21 = " + cfg_num(cfg.gamma21) + "\n";
    s += "gamma23 = " + cfg_num(cfg.gamma23) + "\n";
    s += "gamma31 = " + cfg_num(cfg.gamma31) + "\n";
    s += "gamma_d21 = " + cfg_num(cfg.gamma_d21) + "\n";
    s += "gamma_d23 = " + cfg_num(cfg.gamma_d23) + "\n";
    s += "eps_p = " + cfg_num(cfg.eps_p) + "\n";
    s += "eps_c = " + cfg_num(cfg.eps_c) + "\n";
    s += "delta_p = " + cfg_num(cfg.delta_p) + "\n";
    s += "delta_c = " + cfg_num(cfg.delta_c) + "\n";
    s += "\n[drive]\n";
    s += "omega_p = " + detail::cfg_cplx(cfg.omega_p) + "\n";
    s += "omega_c = " + detail::cfg_cplx(cfg.omega_c) + "\n";
    s += "\n[cavity]\n";
    s += "C = " + cfg_num(cfg.C) + "\n";
    s += "T = " + cfg_num(cfg.T) + "\n";
    s += "theta = " + cfg_num(cfg.theta) + "\n";
    s += std::string("mode = ") +
         (cfg.mode == CavityMode::mean_field ? "mean_field" : "z_resolved") + "\n";
    s += "alpha_l = " + cfg_num(cfg.alpha_l) + "\n";
    s += "n_steps = " + std::to_string(cfg.n_steps) + "\n";
    s += "\n[grid]\n";
    s += "x_min = " + cfg_num(cfg.x_min) + "\n";
    s += "x_max = " + cfg_num(cfg.x_max) + "\n";
    s += "x_count = " + std::to_string(cfg.x_count) + "\n";
    s += "delta_p_min = " + cfg_num(cfg.delta_p_min) + "\n";
    s += "delta_p_max = " + cfg_num(cfg.delta_p_max) + "\n";
    s += "delta_p_count = " + std::to_string(cfg.delta_p_count) + "\n";
    s += "\n[hysteresis]\n";
    s += "y_min = " + cfg_num(cfg.y_min) + "\n";
    s += "y_max = " + cfg_num(cfg.y_max) + "\n";
    s += "y_step = " + cfg_num(cfg.y_step) + "\n";
    s += "x_init = " + cfg_num(cfg.x_init) + "\n";
    s += "\n[sweep]\n";
    s += "name = " + cfg.name + "\n";
    if (!cfg.preset.empty()) s += "preset = " + cfg.preset + "\n";
    s += std::string("emit_curves = ") + (cfg.emit_curves ? "1" : "0") + "\n";
    s += "workers = " + std::to_string(cfg.workers) + "\n";
    for (std::size_t i = 0; i < cfg.axes.size(); ++i) {
        s += "axis" + std::to_string(i + 1) + " = " + cfg.axes[i].path + " :";
        for (const double v : cfg.axes[i].values) s += " " + cfg_num(v);
        s += "\n";
    }
    if (!cfg.out.empty()) {
        s += "\n[output]\n";
        s += "out = " + cfg.out + "\n";
    }
    return s;
}

// A figure preset materialized as a full RunConfig (what `preset <name>`
// emits): base parameters and axes written out explicitly so the file stands
// alone and survives editing.
inline RunConfig preset_config(const std::string& preset) {
    const SweepSpec spec = figure_preset(preset);
    RunConfig cfg;
    const AtomParams& a = spec.base.atom;
    cfg.gamma21 = a.gamma21;
    cfg.gamma23 = a.gamma23;
    cfg.gamma31 = a.gamma31;
    cfg.gamma_d21 = a.gammaD21;
    cfg.gamma_d23 = a.gammaD23;
    cfg.eps_p = a.eps_p;
    cfg.eps_c = a.eps_c;
    cfg.delta_p = a.delta_p;
    cfg.delta_c = a.delta_c;
    cfg.omega_c = spec.base.omega_c;
    const CavityParams& c = spec.base.cavity;
    cfg.C = c.C;
    cfg.T = c.T;
    cfg.theta = c.theta;
    cfg.mode = c.mode;
    cfg.alpha_l = c.alphaL;
    cfg.n_steps = c.n_steps;
    cfg.x_min = spec.base.x_grid.min;
    cfg.x_max = spec.base.x_grid.max;
    cfg.x_count = spec.base.x_grid.count;
    cfg.name = spec.name;
    cfg.axes = spec.axes;
    cfg.emit_curves = spec.emit_curves;
    return cfg;
}

} // namespace obsim
