#pragma once

// Weak-probe linear response of the Lambda system: the exact linearization of
// the equations of motion about the probe-free steady state. The probe-odd
// block closes on the two coherences (rho21, rho31) because populations and
// the coupling coherence are even in omega_p, so the response is one 2x2
// complex solve around that zeroth-order state.

#include <complex>

#include "obsim/atom.hpp"
#include "obsim/steady_state.hpp"

namespace obsim {

// r = lim_{omega_p -> 0} rho21 / (omega_p / 2).
//
// With the probe-free state (a0 = d21, b0 = d23, q0 = rho23), the first-order
// coherences solve
//
//   A p + (i/2) omega_c s = (i/2) a0 omega_p
//   (i/2) conj(omega_c) p + B s = (i/2) conj(q0) omega_p
//
//   A = gamma + i(delta_p - eps_p a0) - (gammaD21/2) a0
//   B = gamma31 + i(delta_p - delta_c) + i(eps_p a0 - eps_c b0)
//
// so r = [i a0 B + omega_c conj(q0)/2] / (A B + |omega_c|^2/4). The conj(q0)
// source matters whenever the coupling transition stays populated (gamma31
// exchange refills |3>); dropping it would overestimate the residual
// absorption inside the transparency window by orders of magnitude.
inline cplx weak_probe_coherence(const AtomParams& at, cplx omega_c) {
    at.validate();
    const SteadyInfo zero = solve_steady(at, Drive{cplx{0.0, 0.0}, omega_c});
    const double a0 = zero.state.d21, b0 = zero.state.d23;
    const cplx q0 = zero.state.rho23;
    const cplx i{0.0, 1.0};
    const cplx A = at.gamma() + i * (at.delta_p - at.eps_p * a0) - 0.5 * at.gammaD21 * a0;
    const cplx B = at.gamma31 + i * (at.delta_p - at.delta_c) +
                   i * (at.eps_p * a0 - at.eps_c * b0);
    if (std::abs(omega_c) == 0.0) return i * a0 / A; // one-photon-only limit
    const cplx det = A * B + 0.25 * std::norm(omega_c);
    // det = 0 needs gamma = 0 exactly (Re det >= gamma Im B + |C|^2/4 > 0 otherwise)
    if (std::abs(det) == 0.0)
        throw std::invalid_argument("weak_probe_coherence: undamped response pole");
    return (i * a0 * B + 0.5 * omega_c * std::conj(q0)) / det;
}

// Probe absorption is the negative imaginary part of the response.
inline double weak_probe_absorption(const AtomParams& at, cplx omega_c) {
    return -weak_probe_coherence(at, omega_c).imag();
}

} // namespace obsim
