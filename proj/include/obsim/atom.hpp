#pragma once

// Three-level Lambda system driven by a probe (|1> <-> |2>) and a coupling
// field (|3> <-> |2>), with near dipole-dipole (NDD) local-field corrections:
// inversion-dependent detuning shifts (eps_p, eps_c) and extra nonlinear
// damping (gammaD21, gammaD23). Everything is expressed in units of gamma21.
//
// The density matrix is stored as two real population differences plus the
// three upper-triangle coherences; the trace constraint is eliminated by
// construction, so trace conservation and Hermiticity are exact at all times.

#include <complex>
#include <stdexcept>

#include "obsim/linalg.hpp"

namespace obsim {

using cplx = std::complex<double>;

struct AtomParams {
    double gamma21 = 1.0;  // radiative decay rate |2> -> |1>
    double gamma23 = 1.0;  // radiative decay rate |2> -> |3>
    double gamma31 = 0.0;  // non-radiative relaxation between |3> and |1>
    double gammaD21 = 0.0; // NDD-induced decay parameter on the probe transition
    double gammaD23 = 0.0; // NDD-induced decay parameter on the coupling transition
    double eps_p = 0.0;    // NDD inversion-dependent detuning, probe transition
    double eps_c = 0.0;    // NDD inversion-dependent detuning, coupling transition
    double delta_p = 0.0;  // probe detuning
    double delta_c = 0.0;  // coupling detuning

    // Mean coherence decay rate; recomputed, never stored independently.
    double gamma() const { return 0.5 * (gamma21 + gamma23 + gamma31); }

    void validate() const {
        auto bad = [](double r) { return !(r >= 0.0) || !std::isfinite(r); };
        if (bad(gamma21) || bad(gamma23) || bad(gamma31) || bad(gammaD21) || bad(gammaD23))
            throw std::invalid_argument("AtomParams: decay rates must be finite and >= 0");
        if (!std::isfinite(eps_p) || !std::isfinite(eps_c) ||
            !std::isfinite(delta_p) || !std::isfinite(delta_c))
            throw std::invalid_argument("AtomParams: NDD shifts and detunings must be finite");
    }
};

// Complex Rabi frequencies of the two driving fields. By the global phase
// freedom omega_c is conventionally taken real non-negative; nothing below
// requires it.
struct Drive {
    cplx omega_p{};
    cplx omega_c{};

    void validate() const {
        if (!std::isfinite(std::abs(omega_p)) || !std::isfinite(std::abs(omega_c)))
            throw std::invalid_argument("Drive: Rabi frequencies must be finite");
    }
};

// v = [d21, d23, Re rho21, Im rho21, Re rho23, Im rho23, Re rho31, Im rho31]
struct DensityState {
    double d21 = -1.0; // rho22 - rho11
    double d23 = 0.0;  // rho22 - rho33
    cplx rho21{};
    cplx rho23{};
    cplx rho31{};

    // Populations reconstructed through the unit-trace closure.
    double rho22() const { return (1.0 + d21 + d23) / 3.0; }
    double rho11() const { return rho22() - d21; }
    double rho33() const { return rho22() - d23; }

    static DensityState ground() { return DensityState{}; }

    Vec8 to_vec() const {
        return {d21, d23, rho21.real(), rho21.imag(),
                rho23.real(), rho23.imag(), rho31.real(), rho31.imag()};
    }
    static DensityState from_vec(const Vec8& v) {
        DensityState s;
        s.d21 = v[0];
        s.d23 = v[1];
        s.rho21 = {v[2], v[3]};
        s.rho23 = {v[4], v[5]};
        s.rho31 = {v[6], v[7]};
        return s;
    }
};

// Liouville right-hand side on the packed vector. p, q, s are the probe,
// coupling and two-photon coherences. The population rows keep the
// asymmetric factor-2 weighting between probe and coupling terms exactly as
// the equations of motion dictate; the gamma31 terms act as a bidirectional
// population exchange between |1> and |3>.
inline Vec8 bloch_rhs_vec(const Vec8& v, const AtomParams& at, const Drive& dr) {
    const double a = v[0], b = v[1];
    const cplx p{v[2], v[3]}, q{v[4], v[5]}, s{v[6], v[7]};
    const cplx P = dr.omega_p, C = dr.omega_c;
    const double g = at.gamma();
    const double rho22 = (1.0 + a + b) / 3.0;
    const cplx i{0.0, 1.0};

    const double Fa = -(at.gamma23 + 2.0 * at.gamma21) * rho22
                      - 2.0 * std::imag(std::conj(P) * p) - std::imag(std::conj(C) * q)
                      - at.gamma31 * (a - b) - at.gammaD21 * std::norm(p);
    const double Fb = -(2.0 * at.gamma23 + at.gamma21) * rho22
                      - std::imag(std::conj(P) * p) - 2.0 * std::imag(std::conj(C) * q)
                      - at.gamma31 * (b - a) - at.gammaD23 * std::norm(q);
    const cplx Fp = -(i * (at.delta_p - at.eps_p * a) + g - 0.5 * at.gammaD21 * a) * p
                    + 0.5 * i * P * a - 0.5 * i * C * s;
    const cplx Fq = -(i * (at.delta_c - at.eps_c * b) + g - 0.5 * at.gammaD23 * b) * q
                    + 0.5 * i * C * b - 0.5 * i * P * std::conj(s);
    const cplx Fs = -(at.gamma31 + i * (at.delta_p - at.delta_c) + i * (at.eps_p * a - at.eps_c * b)) * s
                    - 0.5 * i * std::conj(C) * p + 0.5 * i * P * std::conj(q);

    return {Fa, Fb, Fp.real(), Fp.imag(), Fq.real(), Fq.imag(), Fs.real(), Fs.imag()};
}

inline DensityState bloch_rhs(const DensityState& st, const AtomParams& at, const Drive& dr) {
    return DensityState::from_vec(bloch_rhs_vec(st.to_vec(), at, dr));
}

// Analytic Jacobian of bloch_rhs_vec. Complex coefficients enter as 2x2 real
// blocks: multiplication by K maps to [[Kr,-Ki],[Ki,Kr]], multiplication of
// the conjugate by K maps to [[Kr,Ki],[Ki,-Kr]].
inline Mat8 bloch_jacobian(const Vec8& v, const AtomParams& at, const Drive& dr) {
    const double a = v[0], b = v[1];
    const cplx p{v[2], v[3]}, q{v[4], v[5]}, s{v[6], v[7]};
    const cplx P = dr.omega_p, C = dr.omega_c;
    const double g = at.gamma();
    const cplx i{0.0, 1.0};

    Mat8 J{};
    J[0][0] = -(at.gamma23 + 2.0 * at.gamma21) / 3.0 - at.gamma31;
    J[0][1] = -(at.gamma23 + 2.0 * at.gamma21) / 3.0 + at.gamma31;
    J[0][2] = 2.0 * P.imag() - 2.0 * at.gammaD21 * p.real();
    J[0][3] = -2.0 * P.real() - 2.0 * at.gammaD21 * p.imag();
    J[0][4] = C.imag();
    J[0][5] = -C.real();
    J[1][0] = -(2.0 * at.gamma23 + at.gamma21) / 3.0 + at.gamma31;
    J[1][1] = -(2.0 * at.gamma23 + at.gamma21) / 3.0 - at.gamma31;
    J[1][2] = P.imag();
    J[1][3] = -P.real();
    J[1][4] = 2.0 * C.imag() - 2.0 * at.gammaD23 * q.real();
    J[1][5] = -2.0 * C.real() - 2.0 * at.gammaD23 * q.imag();

    auto put_analytic = [&J](std::size_t r, std::size_t c, cplx K) {
        J[r][c] += K.real();     J[r][c + 1] += -K.imag();
        J[r + 1][c] += K.imag(); J[r + 1][c + 1] += K.real();
    };
    auto put_conj = [&J](std::size_t r, std::size_t c, cplx K) {
        J[r][c] += K.real();     J[r][c + 1] += K.imag();
        J[r + 1][c] += K.imag(); J[r + 1][c + 1] += -K.real();
    };
    auto put_real = [&J](std::size_t r, std::size_t c, cplx K) {
        J[r][c] += K.real();
        J[r + 1][c] += K.imag();
    };

    const cplx Ap = -(i * (at.delta_p - at.eps_p * a) + g - 0.5 * at.gammaD21 * a);
    put_real(2, 0, (i * at.eps_p + 0.5 * at.gammaD21) * p + 0.5 * i * P);
    put_analytic(2, 2, Ap);
    put_analytic(2, 6, -0.5 * i * C);

    const cplx Aq = -(i * (at.delta_c - at.eps_c * b) + g - 0.5 * at.gammaD23 * b);
    put_real(4, 1, (i * at.eps_c + 0.5 * at.gammaD23) * q + 0.5 * i * C);
    put_analytic(4, 4, Aq);
    put_conj(4, 6, -0.5 * i * P);

    const cplx As = -(at.gamma31 + i * (at.delta_p - at.delta_c) + i * (at.eps_p * a - at.eps_c * b));
    put_real(6, 0, -i * at.eps_p * s);
    put_real(6, 1, i * at.eps_c * s);
    put_analytic(6, 6, As);
    put_analytic(6, 2, -0.5 * i * std::conj(C));
    put_conj(6, 4, 0.5 * i * P);
    return J;
}

} // namespace obsim
