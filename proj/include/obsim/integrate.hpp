#pragma once

// Adaptive Dormand-Prince 5(4) integration of the Bloch equations.
// Embedded 4th-order error estimate, FSAL, PI-free step control with the
// usual safety/clamp factors. Plenty for this system: it is only mildly
// stiff (rates and Rabi frequencies within a few orders of magnitude).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "obsim/atom.hpp"

namespace obsim {

struct IntegrationError : std::runtime_error {
    double t; // time at which stepping failed
    IntegrationError(const std::string& msg, double t_) : std::runtime_error(msg), t(t_) {}
};

struct TimePoint {
    double t;
    DensityState state;
};

namespace detail {

inline void axpy(Vec8& y, double a, const Vec8& x) {
    for (std::size_t i = 0; i < kDim; ++i) y[i] += a * x[i];
}

} // namespace detail

// Integrates from t=0 to t_end, returning every accepted step (t=0 and
// t=t_end included). Local error per step is kept within atol + rtol*|y|.
// Throws IntegrationError on step-size underflow or step-budget exhaustion,
// carrying the time of failure.
inline std::vector<TimePoint> integrate(const DensityState& state0, const AtomParams& atom,
                                        const Drive& drive, double t_end,
                                        double rtol = 1e-8, double atol = 1e-10,
                                        long max_steps = 2000000) {
    atom.validate();
    drive.validate();
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw std::invalid_argument("integrate: t_end must be positive and finite");
    if (!(rtol > 0.0) || rtol > 1e-2 || !(atol > 0.0) || atol > 1e-2)
        throw std::invalid_argument("integrate: tolerances must lie in (0, 1e-2]");

    // Dormand-Prince RK5(4)7M tableau; e[] is b5 - b4 for the error estimate.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    auto f = [&](const Vec8& v) { return bloch_rhs_vec(v, atom, drive); };

    Vec8 y = state0.to_vec();
    Vec8 k1 = f(y);

    // Starting step from the scaled derivative norm, clipped to a sane range.
    double h;
    {
        const double d0 = std::max(inf_norm(y), 1e-3);
        const double d1 = inf_norm(k1);
        h = (d1 > 1e-12) ? 0.01 * d0 / d1 : 1e-3;
        h = std::min({h, 0.1 * t_end, 1.0});
        h = std::max(h, 1e-8);
    }

    std::vector<TimePoint> out;
    out.push_back({0.0, state0});

    double t = 0.0;
    for (long step = 0; t < t_end; ++step) {
        if (step >= max_steps)
            throw IntegrationError("integrate: step budget exhausted at t=" + std::to_string(t), t);
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationError("integrate: step size underflow at t=" + std::to_string(t), t);
        bool last = false;
        if (t + h >= t_end) { h = t_end - t; last = true; }

        Vec8 w = y;
        detail::axpy(w, h * a21, k1);
        const Vec8 k2 = f(w);
        w = y; detail::axpy(w, h * a31, k1); detail::axpy(w, h * a32, k2);
        const Vec8 k3 = f(w);
        w = y; detail::axpy(w, h * a41, k1); detail::axpy(w, h * a42, k2); detail::axpy(w, h * a43, k3);
        const Vec8 k4 = f(w);
        w = y; detail::axpy(w, h * a51, k1); detail::axpy(w, h * a52, k2); detail::axpy(w, h * a53, k3);
        detail::axpy(w, h * a54, k4);
        const Vec8 k5 = f(w);
        w = y; detail::axpy(w, h * a61, k1); detail::axpy(w, h * a62, k2); detail::axpy(w, h * a63, k3);
        detail::axpy(w, h * a64, k4); detail::axpy(w, h * a65, k5);
        const Vec8 k6 = f(w);
        Vec8 ynew = y;
        detail::axpy(ynew, h * b1, k1); detail::axpy(ynew, h * b3, k3); detail::axpy(ynew, h * b4, k4);
        detail::axpy(ynew, h * b5, k5); detail::axpy(ynew, h * b6, k6);
        const Vec8 k7 = f(ynew); // FSAL stage

        double err = 0.0;
        for (std::size_t i = 0; i < kDim; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = ei / sc;
            err += r * r;
        }
        err = std::sqrt(err / kDim);

        if (err <= 1.0) {
            t = last ? t_end : t + h;
            y = ynew;
            k1 = k7;
            out.push_back({t, DensityState::from_vec(y)});
        }
        const double fac = (err > 1e-30) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
    }
    return out;
}

} // namespace obsim
