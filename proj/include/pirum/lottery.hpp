#pragma once

// Finite lotteries, CARA/CRRA utilities, expected utility and certainty
// equivalents.
//
// Both families are handled through one parametrisation. With
//   CARA: t = -alpha, z = x
//   CRRA: t = 1 - gamma, z = log(x)
// the utility is u(x) = exp(t z) / t for t != 0 and u(x) = z for t == 0, and
// the certainty equivalent in z-space is the log-mean-exp (1/t) log E[exp(t z)].
// Every large-parameter evaluation goes through that shifted log-domain form.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/errors.hpp"

namespace pirum {

enum class UtilityFamily { cara, crra };

inline std::string_view to_string(UtilityFamily f) { return f == UtilityFamily::cara ? "cara" : "crra"; }

inline UtilityFamily parse_family(std::string_view s) {
    if (s == "cara" || s == "CARA") return UtilityFamily::cara;
    if (s == "crra" || s == "CRRA") return UtilityFamily::crra;
    throw InvalidArgument("unknown utility family '" + std::string(s) + "' (expected cara or crra)");
}

/// Risk parameter theta (alpha for CARA, gamma for CRRA). Finite or +infinity,
/// where +infinity is the infinitely risk-averse agent ranking lotteries by
/// their worst outcome.
class RiskParam {
public:
    constexpr RiskParam(double theta) : value_(theta) {}  // NOLINT: implicit on purpose

    static constexpr RiskParam infinite() { return RiskParam(std::numeric_limits<double>::infinity()); }

    constexpr double value() const { return value_; }
    bool is_infinite() const { return std::isinf(value_) && value_ > 0; }
    bool is_valid() const { return !std::isnan(value_) && value_ != -std::numeric_limits<double>::infinity(); }

private:
    double value_;
};

inline constexpr double probability_sum_tolerance = 1e-12;

class Lottery {
public:
    Lottery(std::vector<double> outcomes, std::vector<double> probabilities)
        : outcomes_(std::move(outcomes)), probabilities_(std::move(probabilities)) {
        if (outcomes_.empty()) throw InvalidArgument("lottery needs at least one outcome");
        if (outcomes_.size() != probabilities_.size())
            throw InvalidArgument("lottery outcome and probability lists differ in length");
        double total = 0.0;
        for (std::size_t i = 0; i < outcomes_.size(); ++i) {
            if (!std::isfinite(outcomes_[i])) throw InvalidArgument("lottery outcome is not finite");
            if (!(probabilities_[i] > 0.0) || !std::isfinite(probabilities_[i]))
                throw InvalidArgument("lottery probabilities must be strictly positive");
            total += probabilities_[i];
        }
        if (std::abs(total - 1.0) > probability_sum_tolerance)
            throw InvalidArgument("lottery probabilities sum to " + std::to_string(total) + ", not 1");
        auto [lo, hi] = std::minmax_element(outcomes_.begin(), outcomes_.end());
        min_ = *lo;
        max_ = *hi;
    }

    static Lottery degenerate(double x) { return Lottery({x}, {1.0}); }

    /// Equal-probability lottery over the given outcomes.
    static Lottery uniform(std::vector<double> outcomes) {
        const auto n = outcomes.size();
        if (n == 0) throw InvalidArgument("lottery needs at least one outcome");
        std::vector<double> p(n, 1.0 / static_cast<double>(n));
        return Lottery(std::move(outcomes), std::move(p));
    }

    /// Parses "x1:p1,x2:p2,...".
    static Lottery parse(std::string_view text);

    std::span<const double> outcomes() const { return outcomes_; }
    std::span<const double> probabilities() const { return probabilities_; }
    std::size_t size() const { return outcomes_.size(); }

    double min() const { return min_; }
    double max() const { return max_; }
    double outcome_span() const { return max_ - min_; }
    bool is_degenerate() const { return min_ == max_; }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += probabilities_[i] * outcomes_[i];
        return m;
    }

    Lottery shifted(double c) const {
        auto x = outcomes_;
        for (auto& v : x) v += c;
        return Lottery(std::move(x), probabilities_);
    }

    Lottery scaled(double k) const {
        auto x = outcomes_;
        for (auto& v : x) v *= k;
        return Lottery(std::move(x), probabilities_);
    }

    /// Sorted ascending with duplicate outcomes merged.
    Lottery canonical() const {
        std::vector<std::size_t> idx(size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return outcomes_[a] < outcomes_[b]; });
        std::vector<double> x, p;
        for (auto i : idx) {
            if (!x.empty() && x.back() == outcomes_[i]) {
                p.back() += probabilities_[i];
            } else {
                x.push_back(outcomes_[i]);
                p.push_back(probabilities_[i]);
            }
        }
        return Lottery(std::move(x), std::move(p));
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t i = 0; i < size(); ++i) {
            if (i) os << ',';
            os << outcomes_[i] << ':' << probabilities_[i];
        }
        return os.str();
    }

private:
    std::vector<double> outcomes_;
    std::vector<double> probabilities_;
    double min_ = 0.0;
    double max_ = 0.0;
};

namespace detail {

inline double parse_double(std::string_view s, std::string_view what) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError("invalid " + std::string(what) + " '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

inline Lottery Lottery::parse(std::string_view text) {
    std::vector<double> x, p;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        auto item = text.substr(pos, comma - pos);
        auto colon = item.find(':');
        if (colon == std::string_view::npos)
            throw ParseError("lottery item '" + std::string(item) + "' is not of the form outcome:probability");
        x.push_back(detail::parse_double(item.substr(0, colon), "outcome"));
        p.push_back(detail::parse_double(item.substr(colon + 1), "probability"));
        pos = comma + 1;
    }
    return Lottery(std::move(x), std::move(p));
}

/// Parses "X|Y" into a pair of lotteries.
inline std::pair<Lottery, Lottery> parse_pair(std::string_view text) {
    auto bar = text.find('|');
    if (bar == std::string_view::npos) throw ParseError("pair must be written as \"<X>|<Y>\"");
    return {Lottery::parse(text.substr(0, bar)), Lottery::parse(text.substr(bar + 1))};
}

inline bool in_support(UtilityFamily f, double x) { return f == UtilityFamily::cara || x > 0.0; }

inline void check_support(UtilityFamily f, const Lottery& L) {
    if (f == UtilityFamily::crra && L.min() <= 0.0)
        throw DomainError("CRRA utility requires strictly positive outcomes (got " + std::to_string(L.min()) + ")");
}

namespace detail {

/// Exponent t of the unified parametrisation.
inline double exponent(UtilityFamily f, double theta) { return f == UtilityFamily::cara ? -theta : 1.0 - theta; }

inline double to_z(UtilityFamily f, double x) { return f == UtilityFamily::cara ? x : std::log(x); }
inline double from_z(UtilityFamily f, double z) { return f == UtilityFamily::cara ? z : std::exp(z); }

inline void check_theta(double theta) {
    if (!std::isfinite(theta)) throw DomainError("risk parameter must be finite here");
}

/// log E[exp(t z)] split as t*m + log1p(S) with every exponent t*(z-m) <= 0.
/// `shift` is added to every outcome before evaluation.
struct LogMoment {
    double shift;  // t * m
    double s;      // sum p (exp(t (z - m)) - 1), in [-1, 0]
    double value() const { return shift + std::log1p(s); }
};

inline double anchor_z(UtilityFamily f, double t, const Lottery& L, double shift) {
    return t > 0 ? to_z(f, L.max() + shift) : to_z(f, L.min() + shift);
}

inline LogMoment log_moment(UtilityFamily f, double t, const Lottery& L, double shift = 0.0) {
    const double m = anchor_z(f, t, L, shift);
    double s = 0.0;
    const auto x = L.outcomes();
    const auto p = L.probabilities();
    for (std::size_t i = 0; i < L.size(); ++i) s += p[i] * std::expm1(t * (to_z(f, x[i] + shift) - m));
    return {t * m, s};
}

inline double mean_z(UtilityFamily f, const Lottery& L, double shift = 0.0) {
    double m = 0.0;
    const auto x = L.outcomes();
    const auto p = L.probabilities();
    for (std::size_t i = 0; i < L.size(); ++i) m += p[i] * to_z(f, x[i] + shift);
    return m;
}

inline constexpr double series_threshold = 1e-8;

/// Second-order cumulant expansion of the z-space certainty equivalent:
/// k1 + t k2 / 2 + t^2 k3 / 6.
inline double z_ce_series(UtilityFamily f, double t, const Lottery& L, double shift = 0.0) {
    const double mu = mean_z(f, L, shift);
    double k2 = 0.0, k3 = 0.0;
    const auto x = L.outcomes();
    const auto p = L.probabilities();
    for (std::size_t i = 0; i < L.size(); ++i) {
        const double d = to_z(f, x[i] + shift) - mu;
        k2 += p[i] * d * d;
        k3 += p[i] * d * d * d;
    }
    return mu + t * k2 / 2.0 + t * t * k3 / 6.0;
}

inline double z_ce_exact(UtilityFamily f, double t, const Lottery& L, double shift = 0.0) {
    const auto lm = log_moment(f, t, L, shift);
    return anchor_z(f, t, L, shift) + std::log1p(lm.s) / t;
}

/// CE of L + shift for finite theta, without building the shifted lottery.
/// Support is the caller's responsibility.
inline double ce_shifted(UtilityFamily f, double theta, const Lottery& L, double shift) {
    const double lo = L.min() + shift, hi = L.max() + shift;
    if (L.is_degenerate()) return lo;
    if (theta == 0.0) return L.mean() + shift;
    const double t = exponent(f, theta);
    double z;
    if (t == 0.0) {
        z = mean_z(f, L, shift);
    } else if (std::abs(t) < series_threshold) {
        z = z_ce_series(f, t, L, shift);
    } else {
        z = z_ce_exact(f, t, L, shift);
    }
    // Rounding can push the value a few ulps outside [min, max].
    return std::clamp(from_z(f, z), lo, hi);
}

/// Signed quantity stored as sign * exp(log_abs).
struct SignedLog {
    int sign = 0;
    double log_abs = -std::numeric_limits<double>::infinity();
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline SignedLog signed_log(double v) {
    if (v == 0.0) return {};
    return {v > 0 ? 1 : -1, std::log(std::abs(v))};
}

/// E[exp(t z_X)] - E[exp(t z_Y)] without overflow or needless cancellation.
inline SignedLog moment_difference(UtilityFamily f, double t, const Lottery& X, const Lottery& Y) {
    const double lx = log_moment(f, t, X).value();
    const double ly = log_moment(f, t, Y).value();
    const double hi = std::max(lx, ly);
    if (hi > std::log(0.5) && hi < std::log(2.0)) return signed_log(std::expm1(lx) - std::expm1(ly));
    if (lx == ly) return {};
    const double lo = std::min(lx, ly);
    return {lx > ly ? 1 : -1, hi + std::log(-std::expm1(lo - hi))};
}

/// E[u(X)] - E[u(Y)] as a signed log.
inline SignedLog eu_difference_log(UtilityFamily f, double theta, const Lottery& X, const Lottery& Y) {
    const double t = exponent(f, theta);
    if (t == 0.0) return signed_log(mean_z(f, X) - mean_z(f, Y));
    auto d = moment_difference(f, t, X, Y);
    if (d.sign == 0) return d;
    return {t > 0 ? d.sign : -d.sign, d.log_abs - std::log(std::abs(t))};
}

}  // namespace detail

/// u_theta(x). Exact identity branch at alpha = 0 and log branch at gamma = 1.
inline double utility(UtilityFamily f, double theta, double x) {
    detail::check_theta(theta);
    if (!in_support(f, x)) throw DomainError("CRRA utility requires x > 0 (got " + std::to_string(x) + ")");
    const double t = detail::exponent(f, theta);
    const double z = detail::to_z(f, x);
    if (t == 0.0) return z;
    return std::exp(t * z) / t;
}

/// Arrow-Pratt coefficient of absolute risk aversion, -u''/u'.
inline double absolute_risk_aversion(UtilityFamily f, double theta, double x) {
    if (!in_support(f, x)) throw DomainError("CRRA utility requires x > 0");
    return f == UtilityFamily::cara ? theta : theta / x;
}

/// E[u_theta(L)], evaluated in the shifted log domain.
inline double expected_utility(UtilityFamily f, double theta, const Lottery& L) {
    detail::check_theta(theta);
    check_support(f, L);
    const double t = detail::exponent(f, theta);
    if (t == 0.0) return detail::mean_z(f, L);
    const auto lm = detail::log_moment(f, t, L);
    const double mag = std::exp(lm.value() - std::log(std::abs(t)));
    return t > 0 ? mag : -mag;
}

/// E[u(X)] - E[u(Y)] computed without forming either expectation separately.
/// Differs from expected_utility(X) - expected_utility(Y) only in rounding.
inline double expected_utility_difference(UtilityFamily f, double theta, const Lottery& X, const Lottery& Y) {
    detail::check_theta(theta);
    check_support(f, X);
    check_support(f, Y);
    return detail::eu_difference_log(f, theta, X, Y).value();
}

/// CE_theta(L) = u^{-1}(E[u(L)]); the minimum outcome at theta = +infinity.
inline double certainty_equivalent(UtilityFamily f, RiskParam theta, const Lottery& L) {
    if (!theta.is_valid()) throw DomainError("risk parameter must be finite or +infinity");
    check_support(f, L);
    if (theta.is_infinite()) return L.min();
    return detail::ce_shifted(f, theta.value(), L, 0.0);
}

}  // namespace pirum
