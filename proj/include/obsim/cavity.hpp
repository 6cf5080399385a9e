#pragma once

// Unidirectional ring cavity around the Lambda medium.
//
// Mean-field mode: the intracavity probe Rabi amplitude x is uniform and the
// cavity reduces to the state equation
//     y = x (1 + i theta/T) + 4 i gamma C rho21(x),
// normalized so the empty cavity is the identity and the two-level reduction
// gives y = x (1 + 2C/(1+2x^2)) with the classic C > 4 bistability border.
// The transmitted field is x itself; plots of output vs input are x vs |y|.
//
// z-resolved mode: the probe propagates through the medium,
//     dE/dzeta = -2 i gamma alphaL rho21(E),   zeta in [0,1],
// and one round trip is E(0) <- sqrt(T) E_I + R exp(-i theta) E(L). The sign
// of the propagation term is fixed by the weak-field limit: on a resonant
// two-level medium |E_out/E_in| must be the Beer amplitude decay e^{-alphaL}
// (rho21/E -> -i/(2 gamma) there). C and alphaL are tied by C = alphaL/(2T),
// under which ring fixed points approach mean-field solutions as alphaL -> 0
// with the input identification E_I = sqrt(T) y.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "obsim/atom.hpp"
#include "obsim/steady_state.hpp"

namespace obsim {

enum class CavityMode { mean_field, z_resolved };

struct CavityParams {
    double C = 150.0;     // cooperativity
    double T = 0.01;      // mirror intensity transmittance; R = 1 - T
    double theta = 0.0;   // cavity detuning phase delta0
    CavityMode mode = CavityMode::mean_field;
    double alphaL = 1e-3; // absorption-length product (z-resolved)
    int n_steps = 32;     // spatial RK4 steps (z-resolved)

    double R() const { return 1.0 - T; }
    double theta_mf() const { return theta / T; } // mean-field scaling of delta0

    void validate() const {
        if (!(C >= 0.0) || !std::isfinite(C))
            throw std::invalid_argument("CavityParams: C must be finite and >= 0");
        if (!(T > 0.0) || T > 1.0)
            throw std::invalid_argument("CavityParams: T must lie in (0, 1]");
        if (!std::isfinite(theta))
            throw std::invalid_argument("CavityParams: theta must be finite");
        if (mode == CavityMode::z_resolved) {
            if (!(alphaL >= 0.0) || !std::isfinite(alphaL))
                throw std::invalid_argument("CavityParams: alphaL must be finite and >= 0");
            if (n_steps < 16)
                throw std::invalid_argument("CavityParams: n_steps must be >= 16");
        }
    }
};

// One mean-field curve sample: input amplitude, its x-derivative obtained by
// implicit differentiation of the steady-state system, and the atomic state.
struct CurveSample {
    cplx y{};
    cplx dy_dx{};
    double slope = 0.0; // d|y|/dx
    DensityState state;
};

namespace detail {

// Derivative of the Bloch right-hand side with respect to the real probe
// amplitude x (drive omega_p = x).
inline Vec8 bloch_rhs_dx(const Vec8& v) {
    const double a = v[0];
    const cplx q{v[4], v[5]}, s{v[6], v[7]};
    const cplx i{0.0, 1.0};
    const cplx dp = 0.5 * i * a;
    const cplx dq = -0.5 * i * std::conj(s);
    const cplx ds = 0.5 * i * std::conj(q);
    return {-2.0 * v[3], -v[3], dp.real(), dp.imag(), dq.real(), dq.imag(), ds.real(), ds.imag()};
}

} // namespace detail

// Mean-field state equation with the analytic curve slope. The slope comes
// from solving J w = -dF/dx at the steady state (rows pinned by the solver
// have their forcing zeroed), so turning points can be located as slope sign
// changes instead of by differencing |y|.
inline CurveSample state_equation_full(double x, const AtomParams& atom, cplx omega_c,
                                       const CavityParams& cav,
                                       const DensityState* warm = nullptr) {
    cav.validate();
    if (cav.mode != CavityMode::mean_field)
        throw std::invalid_argument("state_equation: mean-field mode required");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("state_equation: x must be finite and >= 0");
    const Drive dr{cplx{x, 0.0}, omega_c};
    const SteadyInfo info = solve_steady(atom, dr, warm);
    const Vec8 v = info.state.to_vec();

    const auto sys = detail::build_pinned(v, atom, dr, v);
    Vec8 fx = detail::bloch_rhs_dx(v);
    for (std::size_t i = 0; i < kDim; ++i)
        if (sys.pinned[i]) fx[i] = 0.0;
    for (double& e : fx) e = -e;
    Vec8 w{};
    if (!linear_solve(sys.J, fx, w))
        throw ConvergenceError("state_equation: implicit slope solve failed at x=" +
                                   std::to_string(x),
                               info.residual);

    const double g = atom.gamma();
    const cplx i{0.0, 1.0};
    const cplx one_i_theta = 1.0 + i * cav.theta_mf();
    CurveSample out;
    out.state = info.state;
    out.y = x * one_i_theta + 4.0 * i * g * cav.C * info.state.rho21;
    out.dy_dx = one_i_theta + 4.0 * i * g * cav.C * cplx{w[2], w[3]};
    const double ay = std::abs(out.y);
    out.slope = ay > 0.0 ? (out.y.real() * out.dy_dx.real() + out.y.imag() * out.dy_dx.imag()) / ay
                         : std::abs(out.dy_dx);
    return out;
}

inline cplx state_equation(double x, const AtomParams& atom, cplx omega_c,
                           const CavityParams& cav) {
    return state_equation_full(x, atom, omega_c, cav).y;
}

// Input-output curve traced along an x grid, with turning points, stability
// labels and hysteresis threshold pairs derived from it.
struct OBCurve {
    struct Point {
        double x;
        cplx y;
        double y_mag;
        int branch_id;
    };
    struct TurningPoint {
        double x;
        double y_mag;
        bool is_max; // true: switch-up fold (|y| maximal), false: switch-down
    };
    struct Threshold {
        double y_up;
        double y_down;
    };
    std::vector<Point> points;
    std::vector<TurningPoint> turning_points;
    std::vector<TurningPoint> degenerate_points; // merged fold pairs (tangencies)
    std::vector<Threshold> thresholds;
    // branch k spans turning_points[k-1].x .. turning_points[k].x
    std::vector<bool> branch_stable;
};

namespace detail {

inline double bisect_fold(const AtomParams& atom, cplx omega_c, const CavityParams& cav,
                          double xa, double ga, double xb, double tol,
                          DensityState warm) {
    for (int it = 0; it < 200 && xb - xa > tol; ++it) {
        const double xm = 0.5 * (xa + xb);
        const CurveSample s = state_equation_full(xm, atom, omega_c, cav, &warm);
        warm = s.state;
        if ((ga > 0.0) == (s.slope > 0.0)) {
            xa = xm;
            ga = s.slope;
        } else {
            xb = xm;
        }
    }
    return 0.5 * (xa + xb);
}

// Golden-section minimization of |slope| for tangency (merged-fold) detection.
inline std::pair<double, double> min_abs_slope(const AtomParams& atom, cplx omega_c,
                                               const CavityParams& cav, double xa, double xb,
                                               DensityState warm, double tol = 1e-9) {
    constexpr double gr = 0.6180339887498949;
    auto eval = [&](double x) {
        const CurveSample s = state_equation_full(x, atom, omega_c, cav, &warm);
        warm = s.state;
        return std::abs(s.slope);
    };
    double c = xb - gr * (xb - xa), d = xa + gr * (xb - xa);
    double fc = eval(c), fd = eval(d);
    while (xb - xa > tol) {
        if (fc < fd) {
            xb = d; d = c; fd = fc;
            c = xb - gr * (xb - xa);
            fc = eval(c);
        } else {
            xa = c; c = d; fc = fd;
            d = xa + gr * (xb - xa);
            fd = eval(d);
        }
    }
    const double xm = 0.5 * (xa + xb);
    return {xm, eval(xm)};
}

} // namespace detail

inline OBCurve trace_ob_curve(const AtomParams& atom, cplx omega_c, const CavityParams& cav,
                              const std::vector<double>& x_grid) {
    cav.validate();
    if (x_grid.size() < 64)
        throw std::invalid_argument("trace_ob_curve: x grid needs >= 64 points");
    if (!(x_grid.front() >= 0.0))
        throw std::invalid_argument("trace_ob_curve: x grid must start at x >= 0");
    for (std::size_t i = 1; i < x_grid.size(); ++i)
        if (!(x_grid[i] > x_grid[i - 1]))
            throw std::invalid_argument("trace_ob_curve: x grid must be strictly increasing");

    const std::size_t n = x_grid.size();
    OBCurve curve;
    curve.points.reserve(n);
    std::vector<double> slopes(n);
    std::vector<DensityState> states(n);
    DensityState warm;
    const DensityState* seed = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
        CurveSample s;
        try {
            s = state_equation_full(x_grid[i], atom, omega_c, cav, seed);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("trace_ob_curve: stopped at x=" + std::to_string(x_grid[i]) +
                                       ": " + e.what(),
                                   e.residual);
        }
        warm = s.state;
        seed = &warm;
        slopes[i] = s.slope;
        states[i] = s.state;
        curve.points.push_back({x_grid[i], s.y, std::abs(s.y), 0});
    }

    // folds: slope sign changes refined by bisection far below the grid step
    std::vector<OBCurve::TurningPoint> folds;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if ((slopes[i] > 0.0) == (slopes[i + 1] > 0.0)) continue;
        const double step = x_grid[i + 1] - x_grid[i];
        const double xf = detail::bisect_fold(atom, omega_c, cav, x_grid[i], slopes[i],
                                              x_grid[i + 1], step * 1e-4, states[i]);
        const CurveSample sf = state_equation_full(xf, atom, omega_c, cav, &states[i]);
        folds.push_back({xf, std::abs(sf.y), slopes[i] > 0.0});
    }

    // tangencies: an interior |slope| dip that approaches zero without a sign
    // change is a merged fold pair (degenerate turning point)
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const bool same_sign = (slopes[i - 1] > 0.0) == (slopes[i] > 0.0) &&
                               (slopes[i] > 0.0) == (slopes[i + 1] > 0.0);
        const bool dip = std::abs(slopes[i]) < std::abs(slopes[i - 1]) &&
                         std::abs(slopes[i]) < std::abs(slopes[i + 1]);
        if (!same_sign || !dip || std::abs(slopes[i]) >= 0.05) continue;
        auto [xm, gm] =
            detail::min_abs_slope(atom, omega_c, cav, x_grid[i - 1], x_grid[i + 1], states[i - 1]);
        if (gm <= 1e-4) {
            const CurveSample sm = state_equation_full(xm, atom, omega_c, cav, &states[i - 1]);
            curve.degenerate_points.push_back({xm, std::abs(sm.y), slopes[i] > 0.0});
        }
    }

    // collapse fold pairs closer than the grid can honestly separate
    const double merge_tol = 1e-4 * (x_grid.back() - x_grid.front());
    for (std::size_t i = 0; i + 1 < folds.size();) {
        if (folds[i + 1].x - folds[i].x < merge_tol) {
            const double xm = 0.5 * (folds[i].x + folds[i + 1].x);
            const CurveSample sm = state_equation_full(xm, atom, omega_c, cav);
            curve.degenerate_points.push_back({xm, std::abs(sm.y), folds[i].is_max});
            folds.erase(folds.begin() + static_cast<std::ptrdiff_t>(i),
                        folds.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        } else {
            ++i;
        }
    }
    curve.turning_points = std::move(folds);

    // branch segmentation and the slope stability criterion
    const auto& tps = curve.turning_points;
    curve.branch_stable.resize(tps.size() + 1);
    for (std::size_t k = 0; k <= tps.size(); ++k) {
        const double lo = k == 0 ? x_grid.front() : tps[k - 1].x;
        const double hi = k == tps.size() ? x_grid.back() : tps[k].x;
        const double mid = 0.5 * (lo + hi);
        const auto it = std::lower_bound(x_grid.begin(), x_grid.end(), mid);
        const std::size_t im = std::min<std::size_t>(
            static_cast<std::size_t>(it - x_grid.begin()), n - 1);
        curve.branch_stable[k] = slopes[im] > 0.0;
    }
    for (auto& pt : curve.points) {
        int id = 0;
        while (id < static_cast<int>(tps.size()) && pt.x > tps[static_cast<std::size_t>(id)].x)
            ++id;
        pt.branch_id = id;
    }

    // hysteresis pairs: consecutive (switch-up, switch-down) folds in x order
    for (std::size_t i = 0; i + 1 < tps.size();) {
        if (tps[i].is_max && !tps[i + 1].is_max) {
            curve.thresholds.push_back({tps[i].y_mag, tps[i + 1].y_mag});
            i += 2;
        } else {
            ++i;
        }
    }
    return curve;
}

// Number of curve crossings of |y| = y_in, each crossing counted once.
inline int count_solutions(const OBCurve& curve, double y_in) {
    if (curve.points.empty()) throw std::out_of_range("count_solutions: empty curve");
    double lo = curve.points.front().y_mag, hi = lo;
    for (const auto& p : curve.points) {
        lo = std::min(lo, p.y_mag);
        hi = std::max(hi, p.y_mag);
    }
    if (y_in < lo || y_in > hi)
        throw std::out_of_range("count_solutions: y outside the traced range [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
    int count = 0;
    bool on_level = false;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const double d = curve.points[i].y_mag - y_in;
        if (d == 0.0) {
            if (!on_level) ++count; // a run of exact hits counts once
            on_level = true;
            continue;
        }
        if (i > 0 && !on_level) {
            const double dprev = curve.points[i - 1].y_mag - y_in;
            if (dprev * d < 0.0) ++count;
        }
        on_level = false;
    }
    return count;
}

// Steady-state propagation of the probe envelope through the medium,
// classical RK4 over zeta in [0,1]; the local atomic response is the
// adiabatic steady state at the instantaneous field.
inline cplx propagate_medium(cplx e_in, const AtomParams& atom, cplx omega_c, double alphaL,
                             int n_steps) {
    if (n_steps < 16) throw std::invalid_argument("propagate_medium: n_steps must be >= 16");
    if (!(alphaL >= 0.0) || !std::isfinite(alphaL))
        throw std::invalid_argument("propagate_medium: alphaL must be finite and >= 0");
    if (alphaL == 0.0) return e_in;
    const double g = atom.gamma();
    const cplx i{0.0, 1.0};
    DensityState warm;
    bool have_warm = false;
    auto k = [&](cplx e, double zeta) {
        try {
            const SteadyInfo info =
                solve_steady(atom, Drive{e, omega_c}, have_warm ? &warm : nullptr);
            warm = info.state;
            have_warm = true;
            return -2.0 * i * g * alphaL * info.state.rho21;
        } catch (const ConvergenceError& err) {
            throw ConvergenceError("propagate_medium: steady state failed at zeta=" +
                                       std::to_string(zeta) + ": " + err.what(),
                                   err.residual);
        }
    };
    cplx e = e_in;
    const double h = 1.0 / n_steps;
    for (int s = 0; s < n_steps; ++s) {
        const double z = s * h;
        const cplx k1 = k(e, z);
        const cplx k2 = k(e + 0.5 * h * k1, z + 0.5 * h);
        const cplx k3 = k(e + 0.5 * h * k2, z + 0.5 * h);
        const cplx k4 = k(e + h * k3, z + h);
        e += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return e;
}

// One cavity round trip: mirror feed-in plus the attenuated, phase-shifted
// return of the propagated intracavity field.
inline cplx ring_map(cplx e0, cplx y_in, const AtomParams& atom, cplx omega_c,
                     const CavityParams& cav) {
    cav.validate();
    if (cav.mode != CavityMode::z_resolved)
        throw std::invalid_argument("ring_map: z-resolved mode required");
    const cplx i{0.0, 1.0};
    return std::sqrt(cav.T) * y_in +
           cav.R() * std::exp(-i * cav.theta) * propagate_medium(e0, atom, omega_c, cav.alphaL,
                                                                 cav.n_steps);
}

struct RingFixedPoint {
    cplx e0{};
    bool converged = false;
};

// Fixed point of the ring map by damped Newton on two real variables. The
// map is near-identity in the mean-field regime (G' ~ T plus the medium
// response), so central differences keep the derivative noise well under T.
inline RingFixedPoint ring_fixed_point(cplx y_in, const AtomParams& atom, cplx omega_c,
                                       const CavityParams& cav, cplx e0_init) {
    cav.validate();
    if (cav.mode != CavityMode::z_resolved)
        throw std::invalid_argument("ring_fixed_point: z-resolved mode required");
    const cplx i{0.0, 1.0};
    const cplx ph = cav.R() * std::exp(-i * cav.theta);
    const double sT = std::sqrt(cav.T);
    auto G = [&](cplx e) {
        return e - sT * y_in - ph * propagate_medium(e, atom, omega_c, cav.alphaL, cav.n_steps);
    };
    cplx e0 = e0_init;
    cplx Gv = G(e0);
    const double tol = 3e-13 * std::max(1.0, std::abs(e0));
    for (int it = 0; it < 80; ++it) {
        if (std::abs(Gv) < tol) return {e0, true};
        const double d = 1e-5 * std::max(1.0, std::abs(e0));
        const cplx gxp = G(e0 + d), gxm = G(e0 - d);
        const cplx gyp = G(e0 + i * d), gym = G(e0 - i * d);
        const double j11 = (gxp - gxm).real() / (2 * d), j12 = (gyp - gym).real() / (2 * d);
        const double j21 = (gxp - gxm).imag() / (2 * d), j22 = (gyp - gym).imag() / (2 * d);
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-300)) break;
        cplx step{(-Gv.real() * j22 + Gv.imag() * j12) / det,
                  (-j11 * Gv.imag() + j21 * Gv.real()) / det};
        const double cap = 0.25 * std::max(1.0, std::abs(e0));
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        double lam = 1.0;
        bool moved = false;
        while (lam >= 1.0 / 256) {
            const cplx et = e0 + lam * step;
            const cplx Gt = G(et);
            if (std::abs(Gt) < std::abs(Gv) * (1.0 - 0.25 * lam) || std::abs(Gt) < tol) {
                e0 = et;
                Gv = Gt;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!moved) break;
    }
    return {e0, std::abs(Gv) < 10 * tol};
}

struct ScanPoint {
    double y;
    double x;          // converged intracavity amplitude (|e0| in z-resolved mode)
    bool converged;
};

namespace detail {

// Spectral radius of the 2x2 real Jacobian of one ring round trip, used to
// tell attractors from the unstable middle branch a Newton solve may land on.
inline double ring_spectral_radius(cplx e0, cplx y_in, const AtomParams& atom, cplx omega_c,
                                   const CavityParams& cav) {
    const double d = 1e-6 * std::max(1.0, std::abs(e0));
    const cplx i{0.0, 1.0};
    const cplx fxp = ring_map(e0 + d, y_in, atom, omega_c, cav);
    const cplx fxm = ring_map(e0 - d, y_in, atom, omega_c, cav);
    const cplx fyp = ring_map(e0 + i * d, y_in, atom, omega_c, cav);
    const cplx fym = ring_map(e0 - i * d, y_in, atom, omega_c, cav);
    const double m11 = (fxp - fxm).real() / (2 * d), m12 = (fyp - fym).real() / (2 * d);
    const double m21 = (fxp - fxm).imag() / (2 * d), m22 = (fyp - fym).imag() / (2 * d);
    const double tr = m11 + m22, det = m11 * m22 - m12 * m21;
    const double disc = tr * tr - 4.0 * det;
    if (disc < 0.0) return std::sqrt(std::max(det, 0.0));
    const double rt = std::sqrt(disc);
    return std::max(std::abs(0.5 * (tr + rt)), std::abs(0.5 * (tr - rt)));
}

} // namespace detail

// Quasi-static scan of the input ramp. Mean-field mode: damped residual
// iteration x <- x + lambda (y - |y(x)|)/|d|y|/dx|, which converges onto
// positive-slope (stable) branches and walks off negative-slope ones, so the
// scan reproduces the physical hysteresis jumps. The damping halves on
// residual sign flips (floor 1/64) and steps are capped so narrow
// intermediate branches cannot be overshot. z-resolved mode: Newton on the
// ring map, warm-started along the ramp; a fixed point that is not an
// attractor of the round-trip map is rejected and the scan falls back to the
// physical round-trip relaxation, which contracts by ~(1 - T) per pass and
// crawls through the ghost left by a just-vanished branch, so the iteration
// budget must cover several thousand passes.
inline std::vector<ScanPoint> hysteresis_scan(const AtomParams& atom, cplx omega_c,
                                              const CavityParams& cav,
                                              const std::vector<double>& y_ramp,
                                              double x0 = 0.0) {
    cav.validate();
    std::vector<ScanPoint> out;
    out.reserve(y_ramp.size());

    if (cav.mode == CavityMode::mean_field) {
        double x = std::max(x0, 0.0);
        double x_last_ok = x;
        DensityState warm;
        const DensityState* seed = nullptr;
        for (const double y : y_ramp) {
            double lam = 0.5;
            double prev_res = 0.0;
            bool have_prev = false;
            bool ok = false;
            for (int it = 0; it < 2000; ++it) {
                const CurveSample s = state_equation_full(x, atom, omega_c, cav, seed);
                warm = s.state;
                seed = &warm;
                const double res = y - std::abs(s.y);
                if (std::abs(res) < 1e-9 * std::max(1.0, y)) {
                    ok = true;
                    break;
                }
                double step = lam * res / std::max(std::abs(s.slope), 1e-3);
                step = std::clamp(step, -0.25, 0.25);
                if (have_prev && res * prev_res < 0.0) lam = std::max(0.5 * lam, 1.0 / 64);
                prev_res = res;
                have_prev = true;
                x = std::max(x + step, 0.0);
            }
            out.push_back({y, x, ok});
            if (ok)
                x_last_ok = x;
            else
                x = x_last_ok; // contract: continue the scan from the last converged point
        }
        return out;
    }

    // z-resolved
    cplx e{std::max(x0, 0.0), 0.0};
    for (const double y : y_ramp) {
        const cplx y_in = std::sqrt(cav.T) * cplx{y, 0.0}; // mean-field input calibration
        bool ok = false;
        for (int round = 0; round < 25 && !ok; ++round) {
            const RingFixedPoint fp = ring_fixed_point(y_in, atom, omega_c, cav, e);
            if (fp.converged) {
                if (detail::ring_spectral_radius(fp.e0, y_in, atom, omega_c, cav) <=
                    1.0 + 1e-9) {
                    e = fp.e0;
                    ok = true;
                    break;
                }
                // stranded on the repelling middle branch: step off it, else
                // the round-trip relaxation below would not move
                if (std::abs(fp.e0 - e) < 1e-2 * std::max(1.0, std::abs(e)))
                    e += cplx{1e-4 * (1.0 + std::abs(e)), 0.0};
            }
            // a failed Newton ends at the residual minimum of a fold ghost;
            // never restart from there, keep the relaxation state so the
            // crawl through the ghost accumulates across rounds. The block is
            // unconditional: a small per-pass step cannot tell the ghost
            // center from an attractor, only the Newton retry above can.
            for (int burst = 0; burst < 2000; ++burst)
                e = ring_map(e, y_in, atom, omega_c, cav);
        }
        // unconverged points keep the transient state: the ramp continues from
        // it, so progress through a slow fold passage is never thrown away
        out.push_back({y, std::abs(e), ok});
    }
    return out;
}

} // namespace obsim
