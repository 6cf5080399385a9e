#pragma once

// Parameter sweeps over the cavity curve tracer. A sweep is a Cartesian
// product of value lists bound to named parameter paths; every grid point is
// one full curve trace. Records are stored by row-major grid index, so the
// output is byte-identical for any worker count.

#include <atomic>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "obsim/atom.hpp"
#include "obsim/cavity.hpp"

namespace obsim {

struct GridSpec {
    double min = 0.0;
    double max = 28.0;
    int count = 1401;

    void validate() const {
        if (!(std::isfinite(min) && std::isfinite(max)) || !(max > min))
            throw std::invalid_argument("GridSpec: need finite max > min");
        if (count < 2) throw std::invalid_argument("GridSpec: need count >= 2");
    }
    std::vector<double> values() const {
        validate();
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i)
            v[static_cast<std::size_t>(i)] = min + (max - min) * i / (count - 1);
        return v;
    }
};

// Base parameter set a sweep perturbs.
struct SweepBase {
    AtomParams atom;
    cplx omega_c{2.0, 0.0};
    CavityParams cavity;
    GridSpec x_grid;
};

// Assign one scalar by parameter path. Compound paths atom.eps and
// atom.gamma_d set the probe/coupling pair together (the usual published
// symmetric choice).
inline void set_param(SweepBase& base, const std::string& path, double value) {
    if (path == "atom.gamma21") base.atom.gamma21 = value;
    else if (path == "atom.gamma23") base.atom.gamma23 = value;
    else if (path == "atom.gamma31") base.atom.gamma31 = value;
    else if (path == "atom.gamma_d21") base.atom.gammaD21 = value;
    else if (path == "atom.gamma_d23") base.atom.gammaD23 = value;
    else if (path == "atom.gamma_d") base.atom.gammaD21 = base.atom.gammaD23 = value;
    else if (path == "atom.eps_p") base.atom.eps_p = value;
    else if (path == "atom.eps_c") base.atom.eps_c = value;
    else if (path == "atom.eps") base.atom.eps_p = base.atom.eps_c = value;
    else if (path == "atom.delta_p") base.atom.delta_p = value;
    else if (path == "atom.delta_c") base.atom.delta_c = value;
    else if (path == "drive.omega_c") base.omega_c = cplx{value, 0.0};
    else if (path == "cavity.C") base.cavity.C = value;
    else if (path == "cavity.T") base.cavity.T = value;
    else if (path == "cavity.theta") base.cavity.theta = value;
    else if (path == "cavity.alpha_l") base.cavity.alphaL = value;
    else if (path == "x_grid.min") base.x_grid.min = value;
    else if (path == "x_grid.max") base.x_grid.max = value;
    else
        throw std::invalid_argument(
            "set_param: unknown path '" + path +
            "' (valid: atom.{gamma21,gamma23,gamma31,gamma_d21,gamma_d23,gamma_d,eps_p,eps_c,"
            "eps,delta_p,delta_c}, drive.omega_c, cavity.{C,T,theta,alpha_l}, "
            "x_grid.{min,max})");
}

struct SweepAxis {
    std::string path;
    std::vector<double> values;
    friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

struct SweepSpec {
    std::string name = "custom";
    SweepBase base;
    std::vector<SweepAxis> axes; // Cartesian product, row-major (last axis fastest)
    bool emit_curves = false;
    std::size_t max_points = 100000;

    std::size_t point_count() const {
        std::size_t n = 1;
        for (const auto& ax : axes) n *= ax.values.size();
        return n;
    }
    void validate() const {
        base.atom.validate();
        base.cavity.validate();
        base.x_grid.validate();
        for (const auto& ax : axes) {
            if (ax.values.empty())
                throw std::invalid_argument("SweepSpec: axis '" + ax.path + "' has no values");
            SweepBase probe = base;
            set_param(probe, ax.path, ax.values.front()); // throws on unknown path
        }
        if (point_count() > max_points)
            throw std::invalid_argument("SweepSpec: grid has " + std::to_string(point_count()) +
                                        " points, cap is " + std::to_string(max_points));
    }
};

// Canonical parameter families. All share gamma21 = gamma23 = 1, delta0 = 0,
// C = 150 and a 1401-point x grid on [0, 28]. gamma31 is set to 0.025 rather
// than 0: at exactly gamma31 = 0 every two-photon-resonant family sits on the
// lossless dark state, the medium decouples from the probe, and the curve
// collapses to y = x with no turning points at any drive. A small ground
// coherence decay restores the published S-shaped response without touching
// its structure.
inline SweepSpec figure_preset(const std::string& name) {
    SweepSpec spec;
    spec.name = name;
    spec.base.atom.gamma31 = 0.025;
    spec.emit_curves = true;
    const std::vector<double> omega_axis{1.0, 3.0, 5.0, 7.0, 10.0};
    if (name == "fig3a") {
        spec.base.omega_c = cplx{0.05, 0.0};
        spec.axes.push_back({"drive.omega_c", {0.05, 0.1, 0.2, 0.5, 1.0}});
    } else if (name == "fig3b") {
        // coupling detuning family
        spec.base.atom.delta_c = 1.0;
        spec.base.omega_c = cplx{1.0, 0.0};
        spec.axes.push_back({"drive.omega_c", omega_axis});
    } else if (name == "fig4a" || name == "fig4b") {
        spec.base.omega_c = cplx{name == "fig4a" ? 2.0 : 3.0, 0.0};
        spec.axes.push_back({"atom.eps", {0.1, 0.5, 1.0, 1.5, 2.0}});
    } else if (name == "fig5a" || name == "fig5b") {
        // eps = 1.0 here; the same family is also commonly plotted at
        // eps = 2.0, which is one override away (atom.eps)
        spec.base.atom.eps_p = spec.base.atom.eps_c = 1.0;
        const double gd = name == "fig5b" ? 1.5 : 0.0;
        spec.base.atom.gammaD21 = spec.base.atom.gammaD23 = gd;
        spec.base.omega_c = cplx{1.0, 0.0};
        spec.axes.push_back({"drive.omega_c", omega_axis});
    } else if (name == "fig6a" || name == "fig6b") {
        spec.base.atom.eps_p = spec.base.atom.eps_c = 2.0;
        const double gd = name == "fig6b" ? 3.0 : 0.0;
        spec.base.atom.gammaD21 = spec.base.atom.gammaD23 = gd;
        spec.base.omega_c = cplx{1.0, 0.0};
        spec.axes.push_back({"drive.omega_c", omega_axis});
    } else {
        throw std::invalid_argument(
            "figure_preset: unknown name '" + name +
            "' (valid: fig3a fig3b fig4a fig4b fig5a fig5b fig6a fig6b)");
    }
    return spec;
}

inline std::vector<std::string> preset_names() {
    return {"fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b"};
}

struct SweepRecord {
    std::vector<std::size_t> axis_index;
    std::vector<double> axis_values;
    bool ok = false;
    std::string error;
    int turning_points = 0;
    std::vector<OBCurve::Threshold> thresholds;
    OBCurve curve; // populated only when the spec asks for per-point curves
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepRecord> records; // row-major over spec.axes
};

// Evaluate every grid point exactly once. A point failure is recorded in its
// slot, never thrown; workers pull indices from a shared counter and write
// into disjoint preallocated slots, so records do not depend on scheduling.
inline SweepResult run_sweep(const SweepSpec& spec, int parallelism = 1) {
    spec.validate();
    if (parallelism < 1) throw std::invalid_argument("run_sweep: parallelism must be >= 1");
    const std::size_t n = spec.point_count();
    SweepResult result;
    result.spec = spec;
    result.records.resize(n);

    auto eval_point = [&spec](std::size_t flat, SweepRecord& rec) {
        rec.axis_index.resize(spec.axes.size());
        rec.axis_values.resize(spec.axes.size());
        std::size_t rem = flat;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const std::size_t len = spec.axes[a].values.size();
            rec.axis_index[a] = rem % len;
            rec.axis_values[a] = spec.axes[a].values[rec.axis_index[a]];
            rem /= len;
        }
        SweepBase pt = spec.base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
            set_param(pt, spec.axes[a].path, rec.axis_values[a]);
        try {
            OBCurve curve = trace_ob_curve(pt.atom, pt.omega_c, pt.cavity, pt.x_grid.values());
            rec.turning_points = static_cast<int>(curve.turning_points.size());
            rec.thresholds = curve.thresholds;
            if (spec.emit_curves) rec.curve = std::move(curve);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };

    if (parallelism == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) eval_point(i, result.records[i]);
        return result;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            eval_point(i, result.records[i]);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return result;
}

} // namespace obsim
