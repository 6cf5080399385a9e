#pragma once

// Nonlinear steady state of the driven Lambda system: damped Newton with the
// analytic Jacobian, seeded from the NDD-free linear steady state, with a
// short NDD continuation ramp as the fallback. The NDD terms (|rho|^2 and
// inversion-coherence products) are the only nonlinearity.
//
// Two parameter families make the Jacobian structurally singular and need
// pinning rather than regularization:
//   - nothing couples |3> (omega_c = 0, gamma23 = 0, gamma31 = 0): rho33 is
//     conserved, the d23 row is redundant and is replaced by the constraint
//     d21 - 2 d23 = 3 rho33(init) - 1;
//   - an identically-zero row (an undamped coherence decoupled from the
//     drive) pins that component to its initial value.

#include <cmath>
#include <stdexcept>
#include <string>

#include "obsim/atom.hpp"
#include "obsim/linalg.hpp"

namespace obsim {

struct ConvergenceError : std::runtime_error {
    double residual; // best residual infinity-norm reached
    ConvergenceError(const std::string& msg, double r) : std::runtime_error(msg), residual(r) {}
};

struct NewtonOptions {
    double tol = 1e-12;    // convergence target on ||F||_inf
    double accept = 1e-10; // residual still accepted when the line search stalls
    int max_iter = 60;
    int ndd_stages = 8;    // continuation ramp length on (eps, gammaD)
};

struct SteadyInfo {
    DensityState state;
    double residual = 0.0;
    bool degenerate_family = false; // gamma31 = 0 with both drives off: any
                                    // |1>/|3> split is stationary; the ground
                                    // state is returned by convention
};

namespace detail {

inline double rho33_of(const Vec8& v) { return (1.0 + v[0] - 2.0 * v[1]) / 3.0; }

struct PinnedSystem {
    Vec8 F;
    Mat8 J;
    std::array<bool, kDim> pinned{};
};

inline PinnedSystem build_pinned(const Vec8& v, const AtomParams& at, const Drive& dr,
                                 const Vec8& v_ref) {
    PinnedSystem sys{bloch_rhs_vec(v, at, dr), bloch_jacobian(v, at, dr), {}};
    if (std::abs(dr.omega_c) == 0.0 && at.gamma23 == 0.0 && at.gamma31 == 0.0) {
        const double q0 = rho33_of(v_ref);
        sys.F[1] = (v[0] - 2.0 * v[1]) - (3.0 * q0 - 1.0);
        for (auto& e : sys.J[1]) e = 0.0;
        sys.J[1][0] = 1.0;
        sys.J[1][1] = -2.0;
        sys.pinned[1] = true;
    }
    for (std::size_t i = 0; i < kDim; ++i) {
        if (sys.pinned[i]) continue;
        double rowmax = 0.0;
        for (double e : sys.J[i]) rowmax = std::max(rowmax, std::abs(e));
        if (rowmax < 1e-13 && std::abs(sys.F[i]) < 1e-13) {
            sys.J[i][i] = 1.0;
            sys.F[i] = v[i] - v_ref[i];
            sys.pinned[i] = true;
        }
    }
    return sys;
}

struct NewtonResult {
    Vec8 v;
    double residual;
    bool ok;
};

inline NewtonResult newton(const Vec8& v0, const AtomParams& at, const Drive& dr,
                           const NewtonOptions& opt) {
    Vec8 v = v0;
    PinnedSystem sys = build_pinned(v, at, dr, v0);
    double nF = inf_norm(sys.F);
    for (int it = 0; it < opt.max_iter; ++it) {
        if (nF <= opt.tol) return {v, nF, true};
        Vec8 rhs;
        for (std::size_t i = 0; i < kDim; ++i) rhs[i] = -sys.F[i];
        Vec8 dv;
        if (!linear_solve(sys.J, rhs, dv)) return {v, nF, nF <= opt.accept};
        // backtracking line search on ||F||
        double lam = 1.0;
        bool moved = false;
        while (lam >= 1.0 / 1024) {
            Vec8 vt = v;
            for (std::size_t i = 0; i < kDim; ++i) vt[i] += lam * dv[i];
            PinnedSystem st = build_pinned(vt, at, dr, v0);
            const double nFt = inf_norm(st.F);
            if (nFt < nF * (1.0 - 0.25 * lam) || nFt < opt.tol) {
                v = vt;
                sys = std::move(st);
                nF = nFt;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!moved) return {v, nF, nF <= opt.accept};
    }
    return {v, nF, nF <= opt.accept};
}

// With NDD off the system is linear in the state: one exact solve from zero.
// Falls back to the ground state when the linear system is singular (the
// degenerate population families) or badly scaled.
inline Vec8 linear_init(const AtomParams& atom, const Drive& dr) {
    AtomParams at = atom;
    at.gammaD21 = at.gammaD23 = 0.0;
    at.eps_p = at.eps_c = 0.0;
    const Vec8 zero{};
    const Mat8 J = bloch_jacobian(zero, at, dr);
    Vec8 c = bloch_rhs_vec(zero, at, dr);
    for (double& x : c) x = -x;
    Vec8 v;
    Mat8 lu = J;
    std::array<int, kDim> piv{};
    if (lu_factor(lu, piv)) {
        v = c;
        lu_solve_factored(lu, piv, v);
        bool ok = true;
        for (double x : v) ok = ok && std::isfinite(x) && std::abs(x) < 1e3;
        if (ok) return v;
    }
    return DensityState::ground().to_vec();
}

} // namespace detail

// Steady-state solve with diagnostics. Deterministic for fixed inputs.
// Throws ConvergenceError (carrying the best residual) when the whole
// continuation schedule fails; never returns a silent bad state.
inline SteadyInfo solve_steady(const AtomParams& atom, const Drive& drive,
                               const DensityState* init = nullptr,
                               const NewtonOptions& opt = {}) {
    atom.validate();
    drive.validate();
    if (init) {
        auto r = detail::newton(init->to_vec(), atom, drive, opt);
        if (r.ok) return {DensityState::from_vec(r.v), r.residual, false};
    }
    const bool degenerate = atom.gamma31 == 0.0 && std::abs(drive.omega_p) == 0.0 &&
                            std::abs(drive.omega_c) == 0.0;
    Vec8 v0 = detail::linear_init(atom, drive);
    auto r = detail::newton(v0, atom, drive, opt);
    if (r.ok) return {DensityState::from_vec(r.v), r.residual, degenerate};
    // continuation: ramp the NDD parameters from 0 to target
    Vec8 v = v0;
    double best = r.residual;
    for (int k = 1; k <= opt.ndd_stages; ++k) {
        const double lam = static_cast<double>(k) / opt.ndd_stages;
        AtomParams at = atom;
        at.gammaD21 *= lam;
        at.gammaD23 *= lam;
        at.eps_p *= lam;
        at.eps_c *= lam;
        r = detail::newton(v, at, drive, opt);
        best = std::min(best, r.residual);
        if (!r.ok)
            throw ConvergenceError(
                "steady state: Newton continuation failed at NDD ramp stage " +
                    std::to_string(k) + "/" + std::to_string(opt.ndd_stages) +
                    ", residual " + std::to_string(r.residual),
                std::min(best, r.residual));
        v = r.v;
    }
    return {DensityState::from_vec(r.v), r.residual, degenerate};
}

inline DensityState steady_state(const AtomParams& atom, const Drive& drive) {
    return solve_steady(atom, drive).state;
}

inline DensityState steady_state(const AtomParams& atom, const Drive& drive,
                                 const DensityState& init) {
    return solve_steady(atom, drive, &init).state;
}

} // namespace obsim
