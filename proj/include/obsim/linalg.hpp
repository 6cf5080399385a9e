#pragma once

// Small dense linear algebra for the 8-component Bloch vector.
// Fixed-size, allocation-free; partial-pivot LU with a Tikhonov fallback
// for the structurally singular parameter families (conserved populations,
// decoupled undamped coherences).

#include <array>
#include <cmath>
#include <cstddef>

namespace obsim {

inline constexpr std::size_t kDim = 8;

using Vec8 = std::array<double, kDim>;
using Mat8 = std::array<std::array<double, kDim>, kDim>;

inline double inf_norm(const Vec8& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double inf_norm(const Mat8& a) {
    double m = 0.0;
    for (const auto& row : a)
        for (double x : row) m = std::max(m, std::abs(x));
    return m;
}

// In-place LU factorization with partial pivoting. Returns false when a
// pivot underflows (matrix numerically singular); contents are then junk.
inline bool lu_factor(Mat8& a, std::array<int, kDim>& piv) {
    for (std::size_t k = 0; k < kDim; ++k) {
        std::size_t imax = k;
        double amax = std::abs(a[k][k]);
        for (std::size_t i = k + 1; i < kDim; ++i) {
            if (std::abs(a[i][k]) > amax) { amax = std::abs(a[i][k]); imax = i; }
        }
        if (!(amax > 1e-300)) return false;
        piv[k] = static_cast<int>(imax);
        if (imax != k) std::swap(a[imax], a[k]);
        const double inv = 1.0 / a[k][k];
        for (std::size_t i = k + 1; i < kDim; ++i) {
            const double f = a[i][k] * inv;
            a[i][k] = f;
            for (std::size_t j = k + 1; j < kDim; ++j) a[i][j] -= f * a[k][j];
        }
    }
    return true;
}

inline void lu_solve_factored(const Mat8& lu, const std::array<int, kDim>& piv, Vec8& b) {
    // row interchanges first (ascending, as recorded), then L then U
    for (std::size_t k = 0; k < kDim; ++k) std::swap(b[k], b[static_cast<std::size_t>(piv[k])]);
    for (std::size_t k = 0; k < kDim; ++k)
        for (std::size_t i = k + 1; i < kDim; ++i) b[i] -= lu[i][k] * b[k];
    for (std::size_t k = kDim; k-- > 0;) {
        for (std::size_t j = k + 1; j < kDim; ++j) b[k] -= lu[k][j] * b[j];
        b[k] /= lu[k][k];
    }
}

// Solve a x = b. On singular a falls back to the Tikhonov-regularized
// normal equations (aT a + mu^2 I) x = aT b, which selects a bounded
// least-squares step along the singular family instead of failing.
inline bool linear_solve(const Mat8& a, const Vec8& b, Vec8& x) {
    Mat8 lu = a;
    std::array<int, kDim> piv{};
    if (lu_factor(lu, piv)) {
        x = b;
        lu_solve_factored(lu, piv, x);
        bool ok = true;
        for (double xi : x) ok = ok && std::isfinite(xi) && std::abs(xi) < 1e12;
        if (ok) return true;
    }
    const double mu = 1e-10 * std::max(1.0, inf_norm(a));
    Mat8 ata{};
    Vec8 atb{};
    for (std::size_t i = 0; i < kDim; ++i) {
        for (std::size_t j = 0; j < kDim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < kDim; ++k) s += a[k][i] * a[k][j];
            ata[i][j] = s;
        }
        ata[i][i] += mu * mu;
        double s = 0.0;
        for (std::size_t k = 0; k < kDim; ++k) s += a[k][i] * b[k];
        atb[i] = s;
    }
    if (!lu_factor(ata, piv)) return false;
    x = atb;
    lu_solve_factored(ata, piv, x);
    for (double xi : x)
        if (!std::isfinite(xi)) return false;
    return true;
}

} // namespace obsim
