#pragma once

// Scalar root finding and 1-D maximisation used by the premium and ordering
// modules.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "pirum/errors.hpp"

namespace pirum::detail {

struct RootResult {
    double x;
    double fx;
    int iterations;
};

/// Brent's method on a bracket [a, b] with f(a) <= 0 <= f(b) (or the reverse).
/// Stops once |f| <= ftol or the bracket shrinks to machine resolution.
template <class F>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double ftol, int max_iter = 200) {
    if (fa == 0.0) return {a, fa, 0};
    if (fb == 0.0) return {b, fb, 0};
    if ((fa > 0) == (fb > 0)) throw ConvergenceError("brent_root: interval does not bracket a root");

    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 1; it <= max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
        const double m = 0.5 * (c - b);
        if (std::abs(fb) <= ftol || std::abs(m) <= tol) return {b, fb, it};

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            // interpolation step (secant or inverse quadratic)
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
        fb = f(b);
    }
    throw ConvergenceError("brent_root: no convergence within iteration limit");
}

/// Plain bisection on the sign of f. Returns the midpoint of the final bracket.
template <class F>
double bisect_sign(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
    double flo = f(lo);
    for (int it = 0; it < max_iter && (hi - lo) > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Golden-section search for a maximum of f on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double xtol) {
    constexpr double r = 0.6180339887498949;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace pirum::detail
