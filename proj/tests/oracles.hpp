#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's solvers.

#include <cmath>
#include <array>
#include <complex>
#include <functional>
#include <random>
#include <utility>

namespace oracle {

using cd = std::complex<double>;

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Even ground state of -u'' - V0 u = lambda u on |x| < w: sqrt(V0 - |l|) tan(w sqrt(V0 - |l|)) = sqrt(|l|).
inline double square_well_ground(double v0, double w) {
    auto f = [&](double e) {
        const double q = std::sqrt(v0 - e);
        return q * std::tan(w * q) - std::sqrt(e);
    };
    // lowest even branch: w q in (0, pi/2)
    const double e_lo = std::max(1e-14, v0 - std::pow(M_PI / (2.0 * w), 2) + 1e-12);
    return -bisect(f, e_lo, v0 - 1e-14);
}

/// Transmission and reflection of the square well -v0 on [-w, w] by the
/// two-interface matching (transfer) matrices.
inline std::pair<cd, cd> square_well_tr(double v0, double w, double k) {
    const cd i(0.0, 1.0);
    const double q = std::sqrt(k * k + v0);
    // state (u, u') propagated across the well
    auto M = [&](double L) {
        return std::array<cd, 4>{std::cos(q * L), std::sin(q * L) / q, -q * std::sin(q * L), std::cos(q * L)};
    };
    const auto m = M(2.0 * w);
    // left: e^{ikx} + r e^{-ikx}; right: t e^{ikx}
    // at x=-w: u = e^{-ikw} + r e^{ikw}, u' = ik(e^{-ikw} - r e^{ikw})
    // after well: u = t e^{ikw}, u' = ik t e^{ikw}
    // solve linear 2x2 for r, t
    const cd a = std::exp(-i * k * w), b = std::exp(i * k * w);
    // u_out = m0 u_in + m1 u'_in ; u'_out = m2 u_in + m3 u'_in
    // unknowns r, t
    const cd c0r = m[0] * b + m[1] * (-i * k * b);
    const cd c0 = m[0] * a + m[1] * (i * k * a);
    const cd c1r = m[2] * b + m[3] * (-i * k * b);
    const cd c1 = m[2] * a + m[3] * (i * k * a);
    // c0 + c0r r = t b ; c1 + c1r r = i k t b
    // => c1 + c1r r = i k (c0 + c0r r)
    const cd r = (i * k * c0 - c1) / (c1r - i * k * c0r);
    const cd t = (c0 + c0r * r) / b;
    return {t, r};
}

/// Classical RK4 for u'' = v(x) u from (x0, u0, du0) to x1 with n steps.
inline std::pair<double, double> rk4(const std::function<double(double)>& v, double x0, double x1, double u0,
                                     double du0, int n) {
    const double h = (x1 - x0) / n;
    double x = x0, u = u0, p = du0;
    for (int s = 0; s < n; ++s) {
        const double k1u = p, k1p = v(x) * u;
        const double k2u = p + 0.5 * h * k1p, k2p = v(x + 0.5 * h) * (u + 0.5 * h * k1u);
        const double k3u = p + 0.5 * h * k2p, k3p = v(x + 0.5 * h) * (u + 0.5 * h * k2u);
        const double k4u = p + h * k3p, k4p = v(x + h) * (u + h * k3u);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        x += h;
    }
    return {u, p};
}

} // namespace oracle
