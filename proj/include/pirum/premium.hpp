#pragma once

// Compensating premium pi_theta(X, Y): the sure amount that must be added to
// the less attractive lottery to make it as good as the other one, signed so
// that pi >= 0 exactly when Y is weakly preferred.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pirum/detail/pchip.hpp"
#include "pirum/detail/roots.hpp"
#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"
#include "pirum/lottery.hpp"

namespace pirum {

struct PremiumOptions {
    /// Absolute tolerance on the CE residual, in units of the pair's outcome span.
    double rel_tol = 1e-10;
    int max_iter = 200;
};

/// Outcome span of X and Y taken together.
inline double pair_span(const Lottery& X, const Lottery& Y) {
    return std::max(X.max(), Y.max()) - std::min(X.min(), Y.min());
}

namespace detail {

// Premium for the orientation CE(X) <= CE(Y): the root of
// g(pi) = CE(X + pi) - CE(Y) on pi >= 0.
inline double upward_premium(UtilityFamily f, double theta, const Lottery& X, const Lottery& Y, double ce_x,
                             double ce_y, const PremiumOptions& opt) {
    const double span = pair_span(X, Y);
    const double ftol = opt.rel_tol * span;
    auto g = [&](double pi) { return ce_shifted(f, theta, X, pi) - ce_y; };

    // X + lo lies pointwise below min Y, X + hi pointwise above max Y.
    double lo = std::max(0.0, Y.min() - X.max());
    double hi = Y.max() - X.min();
    double glo = lo == 0.0 ? ce_x - ce_y : g(lo);
    if (glo >= 0.0) return lo;
    double ghi = g(hi);
    double step = span;
    while (ghi < 0.0) {
        if (hi - lo > 1e6 * span) throw ConvergenceError("compensating premium: bracket expansion failed");
        lo = hi;
        glo = ghi;
        hi += step;
        step *= 2.0;
        ghi = g(hi);
    }
    return brent_root(g, lo, hi, glo, ghi, ftol, opt.max_iter).x;
}

}  // namespace detail

/// pi_theta(X, Y). Closed form at theta = 0 and theta = +infinity.
inline double compensating_premium(UtilityFamily f, RiskParam theta, const Lottery& X, const Lottery& Y,
                                   const PremiumOptions& opt = {}) {
    if (!theta.is_valid()) throw DomainError("risk parameter must be finite or +infinity");
    check_support(f, X);
    check_support(f, Y);
    if (theta.is_infinite()) return Y.min() - X.min();
    if (theta.value() == 0.0) return Y.mean() - X.mean();
    if (pair_span(X, Y) == 0.0) return 0.0;
    const double th = theta.value();
    const double ce_x = detail::ce_shifted(f, th, X, 0.0);
    const double ce_y = detail::ce_shifted(f, th, Y, 0.0);
    if (ce_x <= ce_y) return detail::upward_premium(f, th, X, Y, ce_x, ce_y, opt);
    return -detail::upward_premium(f, th, Y, X, ce_y, ce_x, opt);
}

struct PremiumLimits {
    double pi_zero;  // risk-neutral agent: E[Y] - E[X]
    double pi_inf;   // infinitely risk-averse agent: min Y - min X
};

inline PremiumLimits premium_limits(const Lottery& X, const Lottery& Y) {
    return {Y.mean() - X.mean(), Y.min() - X.min()};
}

/// Uniform parameter grid [lo, hi] with the given step.
struct GridSpec {
    double lo = -20.0;
    double hi = 20.0;
    double step = 0.01;

    std::size_t size() const {
        if (!(hi > lo) || !(step > 0.0)) throw InvalidArgument("grid needs lo < hi and step > 0");
        return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    }

    std::vector<double> nodes() const {
        const std::size_t n = size();
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i)
            g[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        return g;
    }
};

/// pi_theta(X, Y) tabulated on an ascending grid, with monotone cubic
/// interpolation between nodes and constant extrapolation outside.
class PremiumCurve {
public:
    /// `kinks` lists interior node indices where the curve may change slope;
    /// the pieces between kinks are interpolated independently.
    PremiumCurve(std::string pair_id, UtilityFamily family, std::vector<double> grid, std::vector<double> values,
                 std::vector<std::size_t> kinks = {})
        : pair_id_(std::move(pair_id)), family_(family), grid_(std::move(grid)), values_(std::move(values)) {
        const std::size_t n = grid_.size();
        if (n == 0 || n != values_.size())
            throw InvalidArgument("premium curve grid and values must be non-empty and of equal length");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(values_[i]) || !std::isfinite(grid_[i]))
                throw InvalidArgument("premium curve values must be finite");
            if (i > 0 && !(grid_[i] > grid_[i - 1])) throw InvalidArgument("premium curve grid must be strictly ascending");
        }
        std::vector<std::size_t> bounds{0};
        for (auto k : kinks) {
            if (k <= bounds.back() || k + 1 >= n) throw InvalidArgument("premium curve kinks must be ascending interior nodes");
            bounds.push_back(k);
        }
        bounds.push_back(n - 1);
        out_slopes_.assign(n, 0.0);
        in_slopes_.assign(n, 0.0);
        for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
            const std::size_t s = bounds[b], e = bounds[b + 1];
            const auto piece = detail::pchip_slopes(std::span(grid_).subspan(s, e - s + 1),
                                                    std::span(values_).subspan(s, e - s + 1));
            for (std::size_t i = s; i <= e; ++i) {
                if (i < e || e == n - 1) out_slopes_[i] = piece[i - s];
                if (i > s || s == 0) in_slopes_[i] = piece[i - s];
            }
        }
    }

    const std::string& pair_id() const { return pair_id_; }
    UtilityFamily family() const { return family_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return grid_.size(); }
    double left_limit() const { return values_.front(); }
    double right_limit() const { return values_.back(); }

    double operator()(double theta) const {
        return detail::pchip_eval(grid_, values_, out_slopes_, in_slopes_, theta);
    }

    /// CSV with header `theta,premium`.
    void write_csv(std::ostream& os) const {
        os << "theta,premium\n";
        for (std::size_t i = 0; i < size(); ++i)
            os << detail::fmt_double(grid_[i]) << ',' << detail::fmt_double(values_[i]) << '\n';
    }

private:
    std::string pair_id_;
    UtilityFamily family_;
    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> out_slopes_;
    std::vector<double> in_slopes_;
};

/// Tabulates the premium on the grid. The premium has a kink where its sign
/// changes (the lottery receiving the premium switches), so each sign change
/// between two nodes gets an extra node at the indifference point, where the
/// premium is exactly zero, and the pieces on either side are fitted apart.
inline PremiumCurve build_premium_curve(UtilityFamily f, const Lottery& X, const Lottery& Y, const GridSpec& grid = {},
                                        std::string pair_id = {}, const PremiumOptions& opt = {}) {
    const auto nodes = grid.nodes();
    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = compensating_premium(f, nodes[i], X, Y, opt);
    std::vector<double> g, v;
    std::vector<std::size_t> kinks;
    g.reserve(nodes.size());
    v.reserve(nodes.size());
    auto diff = [&](double th) { return certainty_equivalent(f, th, Y) - certainty_equivalent(f, th, X); };
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i > 0 && ((values[i - 1] < 0.0 && values[i] > 0.0) || (values[i - 1] > 0.0 && values[i] < 0.0))) {
            const double h = nodes[i] - nodes[i - 1];
            const double c = detail::bisect_sign(diff, nodes[i - 1], nodes[i], 1e-12 * std::max(1.0, std::abs(nodes[i])));
            if (c - nodes[i - 1] > 1e-6 * h && nodes[i] - c > 1e-6 * h) {
                kinks.push_back(g.size());
                g.push_back(c);
                v.push_back(0.0);
            }
        }
        g.push_back(nodes[i]);
        v.push_back(values[i]);
    }
    return PremiumCurve(std::move(pair_id), f, std::move(g), std::move(v), std::move(kinks));
}

inline double interpolate_premium(const PremiumCurve& curve, double theta) { return curve(theta); }

/// Curves keyed by (pair id, family). Built once, then shared read-only.
class PremiumCurveCache {
public:
    explicit PremiumCurveCache(GridSpec grid = {}) : grid_(grid) {}

    std::shared_ptr<const PremiumCurve> get(const std::string& pair_id, UtilityFamily f, const Lottery& X,
                                            const Lottery& Y) {
        const auto key = std::make_pair(pair_id, f);
        std::lock_guard lock(mutex_);
        if (auto it = curves_.find(key); it != curves_.end()) return it->second;
        auto curve = std::make_shared<const PremiumCurve>(build_premium_curve(f, X, Y, grid_, pair_id));
        curves_.emplace(key, curve);
        return curve;
    }

    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_;
    std::mutex mutex_;
    std::map<std::pair<std::string, UtilityFamily>, std::shared_ptr<const PremiumCurve>> curves_;
};

}  // namespace pirum
