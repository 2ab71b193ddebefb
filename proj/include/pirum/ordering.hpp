#pragma once

// Numerical orderedness certificates for lottery pairs.
//
// A pair (X, Y) is Pi-ordered when pi_theta(X, Y) is (weakly) increasing in
// theta and Omega-ordered when pi_theta(X, Y) changes sign at most once, from
// negative to positive. Both verdicts are read off a premium grid.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pirum/detail/roots.hpp"
#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"
#include "pirum/lottery.hpp"
#include "pirum/premium.hpp"

namespace pirum {

struct OrderOptions {
    /// Monotonicity slack, relative to the pair's outcome span.
    double slack = 1e-9;
    /// |pi| below this (relative to span) counts as zero when reading signs.
    double zero_band = 1e-9;
    /// Sub-intervals used when re-checking a near-flat grid interval.
    int refine = 10;
    /// Bisection tolerance in theta for sign crossings.
    double crossing_tol = 1e-7;
    /// Golden-section tolerance in theta for the premium peak.
    double peak_tol = 1e-5;
};

struct OrderVerdict {
    bool pi_ordered = false;
    bool omega_ordered = false;
    std::optional<double> peak_theta;
    std::optional<double> peak_premium;
    std::vector<double> crossings;
    GridSpec grid_used;
};

namespace detail {

// -1, 0 or +1 with a symmetric zero band.
inline int band_sign(double v, double band) { return v > band ? 1 : (v < -band ? -1 : 0); }

// Checks a near-flat interval on a finer grid.
inline bool refined_nondecreasing(UtilityFamily f, const Lottery& X, const Lottery& Y, double a, double b, double fa,
                                  double fb, int parts, double slack) {
    double prev = fa;
    for (int k = 1; k <= parts; ++k) {
        const double v = k == parts ? fb : compensating_premium(f, a + (b - a) * k / parts, X, Y);
        if (v < prev - slack) return false;
        prev = v;
    }
    return true;
}

}  // namespace detail

/// Grid-based Pi/Omega verdict with crossings and the premium peak.
inline OrderVerdict classify_pair(UtilityFamily f, const Lottery& X, const Lottery& Y, const GridSpec& grid = {},
                                  const OrderOptions& opt = {}) {
    const auto curve = build_premium_curve(f, X, Y, grid);
    const auto& g = curve.grid();
    const auto& v = curve.values();
    const std::size_t n = g.size();
    const double span = pair_span(X, Y);
    const double slack = opt.slack * span;
    const double band = opt.zero_band * span;

    OrderVerdict out;
    out.grid_used = grid;

    out.pi_ordered = true;
    for (std::size_t i = 0; i + 1 < n && out.pi_ordered; ++i) {
        const double d = v[i + 1] - v[i];
        if (d < -slack) {
            out.pi_ordered = false;
        } else if (d <= slack && opt.refine > 1) {
            out.pi_ordered = detail::refined_nondecreasing(f, X, Y, g[i], g[i + 1], v[i], v[i + 1], opt.refine, slack);
        }
    }

    // Sign pattern and crossings.
    out.omega_ordered = true;
    int last_sign = 0;
    std::size_t last_idx = 0;
    bool seen_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
        const int s = detail::band_sign(v[i], band);
        if (s == 0) continue;
        if (last_sign != 0 && s != last_sign) {
            auto diff = [&](double th) {
                return certainty_equivalent(f, th, Y) - certainty_equivalent(f, th, X);
            };
            out.crossings.push_back(detail::bisect_sign(diff, g[last_idx], g[i], opt.crossing_tol));
        }
        if (s < 0 && seen_positive) out.omega_ordered = false;
        if (s > 0) seen_positive = true;
        last_sign = s;
        last_idx = i;
    }

    if (!out.pi_ordered) {
        const auto it = std::max_element(v.begin(), v.end());
        const auto k = static_cast<std::size_t>(it - v.begin());
        if (k > 0 && k + 1 < n) {
            auto pi = [&](double th) { return compensating_premium(f, th, X, Y); };
            auto [th, val] = detail::golden_max(pi, g[k - 1], g[k + 1], opt.peak_tol);
            out.peak_theta = th;
            out.peak_premium = val;
        }
    }
    return out;
}

/// CSV line `pair_id,pi_ordered,omega_ordered,crossing(s),peak_theta,peak_premium`.
/// Multiple crossings are separated by ';'.
inline std::string format_verdict(const std::string& pair_id, const OrderVerdict& v) {
    std::string line = pair_id + ',' + (v.pi_ordered ? "true" : "false") + ',' + (v.omega_ordered ? "true" : "false") + ',';
    for (std::size_t i = 0; i < v.crossings.size(); ++i) {
        if (i) line += ';';
        line += detail::fmt_fixed(v.crossings[i], 6);
    }
    line += ',';
    if (v.peak_theta) line += detail::fmt_fixed(*v.peak_theta, 6);
    line += ',';
    if (v.peak_premium) line += detail::fmt_fixed(*v.peak_premium, 6);
    return line;
}

inline constexpr const char* verdict_header = "pair_id,pi_ordered,omega_ordered,crossings,peak_theta,peak_premium";

/// Every theta on the search grid's range where CE(X) - CE(Y) changes sign,
/// refined by bisection until |CE(X) - CE(Y)| < tol * span.
inline std::vector<double> indifference_thresholds(UtilityFamily f, const Lottery& X, const Lottery& Y,
                                                   const GridSpec& search = {}, double tol = 1e-9) {
    const double span = pair_span(X, Y);
    const double band = tol * span;
    auto diff = [&](double th) { return certainty_equivalent(f, th, X) - certainty_equivalent(f, th, Y); };
    const auto nodes = search.nodes();
    std::vector<double> out;
    int last_sign = 0;
    double last_theta = nodes.front();
    for (double th : nodes) {
        const int s = detail::band_sign(diff(th), band);
        if (s == 0) continue;
        if (last_sign != 0 && s != last_sign) {
            double lo = last_theta, hi = th;
            double flo = diff(lo);
            double mid = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (lo + hi);
                const double fm = diff(mid);
                if (std::abs(fm) < band && hi - lo < 1e-10) break;
                if (hi - lo < 1e-14) break;
                if ((fm > 0) == (flo > 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push_back(mid);
        }
        last_sign = s;
        last_theta = th;
    }
    return out;
}

/// The unique indifference threshold on the search range, if any.
inline std::optional<double> indifference_threshold(UtilityFamily f, const Lottery& X, const Lottery& Y,
                                                    const GridSpec& search = {}, double tol = 1e-9) {
    auto all = indifference_thresholds(f, X, Y, search, tol);
    if (all.empty()) return std::nullopt;
    if (all.size() > 1)
        throw AmbiguityError("pair has " + std::to_string(all.size()) + " indifference crossings on the search range");
    return all.front();
}

/// Local sufficient condition for premium monotonicity under a small spread
/// X = Y + hS: A_theta(y) * Var(S | Y = y) nonincreasing in y.
/// `conditional_variance[i]` belongs to `Y.outcomes()[i]`.
inline bool mps_local_diagnostic(UtilityFamily f, double theta, const Lottery& Y,
                                 std::span<const double> conditional_variance) {
    if (conditional_variance.size() != Y.size())
        throw InvalidArgument("one conditional variance per outcome of Y is required");
    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        const double y = Y.outcomes()[i];
        rows.emplace_back(y, absolute_risk_aversion(f, theta, y) * conditional_variance[i]);
    }
    std::sort(rows.begin(), rows.end());
    double scale = 0.0;
    for (auto& r : rows) scale = std::max(scale, std::abs(r.second));
    const double tol = 1e-12 * scale;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].second > rows[i - 1].second + tol) return false;
    return true;
}

}  // namespace pirum
