#pragma once

// CSV emission. All numbers print with 17 significant digits ("%.17g"), which
// round-trips IEEE doubles exactly, so identical results serialize to
// identical bytes. One header line, '.' decimal point, no quoting (no field
// we emit contains a comma).

#include <cstdio>
#include <string>
#include <vector>

#include "obsim/cavity.hpp"
#include "obsim/sweep.hpp"

namespace obsim {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string curve_csv(const OBCurve& curve) {
    std::string out = "x,y_re,y_im,y_mag,branch_id,stable\n";
    for (const auto& p : curve.points) {
        const std::size_t b = static_cast<std::size_t>(p.branch_id);
        const bool stable = b < curve.branch_stable.size() && curve.branch_stable[b];
        out += fmt17(p.x) + ',' + fmt17(p.y.real()) + ',' + fmt17(p.y.imag()) + ',' +
               fmt17(p.y_mag) + ',' + std::to_string(p.branch_id) + ',' + (stable ? '1' : '0') +
               '\n';
    }
    return out;
}

inline std::string spectrum_csv(const std::vector<double>& delta_p,
                                const std::vector<cplx>& response) {
    std::string out = "delta_p,re_response,im_response\n";
    for (std::size_t i = 0; i < delta_p.size(); ++i)
        out += fmt17(delta_p[i]) + ',' + fmt17(response[i].real()) + ',' +
               fmt17(response[i].imag()) + '\n';
    return out;
}

inline std::string hysteresis_csv(const std::vector<ScanPoint>& up,
                                  const std::vector<ScanPoint>& down) {
    std::string out = "direction,y,x,converged\n";
    for (const auto& p : up)
        out += std::string("up,") + fmt17(p.y) + ',' + fmt17(p.x) + ',' +
               (p.converged ? '1' : '0') + '\n';
    for (const auto& p : down)
        out += std::string("down,") + fmt17(p.y) + ',' + fmt17(p.x) + ',' +
               (p.converged ? '1' : '0') + '\n';
    return out;
}

inline std::string sweep_summary_csv(const SweepResult& result) {
    std::size_t max_thr = 0;
    for (const auto& r : result.records) max_thr = std::max(max_thr, r.thresholds.size());
    std::string out;
    for (const auto& ax : result.spec.axes) out += ax.path + ',';
    out += "ok,turning_points";
    for (std::size_t t = 0; t < max_thr; ++t) {
        const std::string n = std::to_string(t + 1);
        out += ",threshold_up_" + n + ",threshold_down_" + n;
    }
    out += '\n';
    for (const auto& r : result.records) {
        for (const double v : r.axis_values) out += fmt17(v) + ',';
        out += (r.ok ? '1' : '0');
        out += ',' + std::to_string(r.turning_points);
        for (std::size_t t = 0; t < max_thr; ++t) {
            if (t < r.thresholds.size())
                out += ',' + fmt17(r.thresholds[t].y_up) + ',' + fmt17(r.thresholds[t].y_down);
            else
                out += ",,";
        }
        out += '\n';
    }
    return out;
}

} // namespace obsim
