#pragma once

// Monotone piecewise cubic Hermite interpolation (Fritsch-Carlson slopes with
// the three-point shape-preserving end conditions).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace pirum::detail {

inline double pchip_end_slope(double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if ((s > 0) != (d0 > 0) || d0 == 0.0) {
        s = 0.0;
    } else if ((d0 > 0) != (d1 > 0) && std::abs(s) > std::abs(3.0 * d0)) {
        s = 3.0 * d0;
    }
    return s;
}

inline std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> slope(n, 0.0);
    if (n < 2) return slope;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        slope[0] = slope[1] = delta[0];
        return slope;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        slope[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    slope[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
    slope[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return slope;
}

/// Evaluates the Hermite interpolant; constant beyond the end nodes. Node k
/// uses `out_slope[k]` as the start of its right interval and `in_slope[k]`
/// as the end of its left interval, which allows kinks at chosen nodes.
inline double pchip_eval(std::span<const double> x, std::span<const double> y, std::span<const double> out_slope,
                         std::span<const double> in_slope, double q) {
    const std::size_t n = x.size();
    if (q <= x[0]) return y[0];
    if (q >= x[n - 1]) return y[n - 1];
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
    const double h = x[k + 1] - x[k];
    const double s = (q - x[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y[k] + h10 * h * out_slope[k] + h01 * y[k + 1] + h11 * h * in_slope[k + 1];
}

inline double pchip_eval(std::span<const double> x, std::span<const double> y, std::span<const double> slope,
                         double q) {
    return pchip_eval(x, y, slope, slope, q);
}

}  // namespace pirum::detail
