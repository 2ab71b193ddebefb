#pragma once

// Stochastic choice models over lotteries.
//
// RUM kinds map each option to a preference index V and choose by logit on
// lambda * V. The random parameter model (RPM) instead perturbs theta and
// chooses by logit on lambda * (threshold - theta). Trembles flip the chosen
// option with probability kappa.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"
#include "pirum/lottery.hpp"
#include "pirum/ordering.hpp"
#include "pirum/premium.hpp"

namespace pirum {

enum class ModelKind { eu_rum, ce_rum, pi_rum, cum_pi_rum, rpm, con_eu };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::eu_rum: return "eu";
        case ModelKind::ce_rum: return "ce";
        case ModelKind::pi_rum: return "pi";
        case ModelKind::cum_pi_rum: return "cumpi";
        case ModelKind::rpm: return "rpm";
        case ModelKind::con_eu: return "coneu";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "eu") return ModelKind::eu_rum;
    if (s == "ce") return ModelKind::ce_rum;
    if (s == "pi") return ModelKind::pi_rum;
    if (s == "cumpi") return ModelKind::cum_pi_rum;
    if (s == "rpm") return ModelKind::rpm;
    if (s == "coneu") return ModelKind::con_eu;
    throw InvalidArgument("unknown model '" + std::string(s) + "' (expected pi|ce|eu|cumpi|rpm|coneu)");
}

inline bool is_rum(ModelKind k) { return k != ModelKind::rpm; }

struct ModelParams {
    double theta = 0.0;
    double lambda = 1.0;
    double kappa = 0.0;

    void validate() const {
        if (!std::isfinite(theta)) throw InvalidArgument("theta must be finite");
        if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
        if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidArgument("kappa must lie in [0, 1]");
    }
};

/// Model kind, utility family and parameters, e.g.
/// `model=pi;family=crra;theta=0.7;lambda=0.003;kappa=0.05`.
struct ModelSpec {
    ModelKind kind = ModelKind::pi_rum;
    UtilityFamily family = UtilityFamily::crra;
    ModelParams params;

    static ModelSpec parse(std::string_view text) {
        ModelSpec spec;
        bool have_model = false;
        for (auto item : detail::split(text, ';')) {
            item = detail::trim(item);
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string_view::npos) throw ParseError("model spec item '" + std::string(item) + "' lacks '='");
            const auto key = detail::trim(item.substr(0, eq));
            const auto val = detail::trim(item.substr(eq + 1));
            if (key == "model") {
                spec.kind = parse_model_kind(val);
                have_model = true;
            } else if (key == "family") {
                spec.family = parse_family(val);
            } else if (key == "theta" || key == "gamma" || key == "alpha") {
                spec.params.theta = detail::parse_double(val, "theta");
            } else if (key == "lambda") {
                spec.params.lambda = detail::parse_double(val, "lambda");
            } else if (key == "kappa") {
                spec.params.kappa = detail::parse_double(val, "kappa");
            } else {
                throw ParseError("unknown model spec key '" + std::string(key) + "'");
            }
        }
        if (!have_model) throw ParseError("model spec needs model=...");
        spec.params.validate();
        return spec;
    }

    std::string to_string() const {
        return "model=" + std::string(pirum::to_string(kind)) + ";family=" + std::string(pirum::to_string(family)) +
               ";theta=" + detail::fmt_double(params.theta) + ";lambda=" + detail::fmt_double(params.lambda) +
               ";kappa=" + detail::fmt_double(params.kappa);
    }
};

/// Ordered list of options. For pairs, slot 0 is X (risky) and slot 1 is Y (safe).
using Menu = std::vector<Lottery>;

/// Logistic CDF, the distribution of differences of extreme-value type I shocks.
inline double logistic(double z) {
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double tremble(double rho, double kappa) { return (1.0 - kappa) * rho + kappa * (1.0 - rho); }

namespace detail {

inline double signed_ratio(SignedLog num, SignedLog den) {
    if (num.sign == 0) return 0.0;
    if (den.sign == 0) throw DomainError("contextual utility: zero utility range");
    return num.sign * den.sign * std::exp(num.log_abs - den.log_abs);
}

/// (E[u(X)] - E[u(Y)]) / (u(z_max) - u(z_min)) with precomputed extreme-outcome lotteries.
inline double contextual_difference(UtilityFamily f, double theta, const Lottery& X, const Lottery& Y,
                                    const Lottery& zmax, const Lottery& zmin) {
    if (zmax.min() == zmin.min()) return 0.0;
    return signed_ratio(eu_difference_log(f, theta, X, Y), eu_difference_log(f, theta, zmax, zmin));
}

inline SignedLog expected_utility_log(UtilityFamily f, double theta, const Lottery& L) {
    const double t = exponent(f, theta);
    if (t == 0.0) return signed_log(mean_z(f, L));
    return {t > 0 ? 1 : -1, log_moment(f, t, L).value() - std::log(std::abs(t))};
}

inline void check_menu(UtilityFamily f, const Menu& menu) {
    if (menu.size() < 2) throw InvalidArgument("a menu needs at least two lotteries");
    for (const auto& L : menu) check_support(f, L);
}

// Indices of the menu ordered best-first by CE; ties keep the lower index first.
inline std::vector<std::size_t> rank_order(UtilityFamily f, double theta, const Menu& menu) {
    std::vector<double> ce(menu.size());
    for (std::size_t i = 0; i < menu.size(); ++i) ce[i] = certainty_equivalent(f, theta, menu[i]);
    std::vector<std::size_t> order(menu.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ce[a] > ce[b]; });
    return order;
}

inline std::pair<Lottery, Lottery> extreme_outcomes(const Menu& menu) {
    double lo = menu.front().min(), hi = menu.front().max();
    for (const auto& L : menu) {
        lo = std::min(lo, L.min());
        hi = std::max(hi, L.max());
    }
    return {Lottery::degenerate(hi), Lottery::degenerate(lo)};
}

}  // namespace detail

/// Preference indices V_i(theta) of a RUM kind.
inline std::vector<double> value_index(ModelKind kind, UtilityFamily f, double theta, const Menu& menu) {
    if (kind == ModelKind::rpm) throw InvalidArgument("the random parameter model has no preference index");
    detail::check_theta(theta);
    detail::check_menu(f, menu);
    const std::size_t n = menu.size();
    std::vector<double> v(n);
    switch (kind) {
        case ModelKind::eu_rum:
            for (std::size_t i = 0; i < n; ++i) v[i] = expected_utility(f, theta, menu[i]);
            break;
        case ModelKind::ce_rum:
            for (std::size_t i = 0; i < n; ++i) v[i] = certainty_equivalent(f, theta, menu[i]);
            break;
        case ModelKind::pi_rum: {
            const auto best = detail::rank_order(f, theta, menu).front();
            for (std::size_t i = 0; i < n; ++i) v[i] = -compensating_premium(f, theta, menu[i], menu[best]);
            break;
        }
        case ModelKind::cum_pi_rum: {
            const auto order = detail::rank_order(f, theta, menu);
            v[order[0]] = 0.0;
            for (std::size_t k = 1; k < n; ++k)
                v[order[k]] = v[order[k - 1]] - compensating_premium(f, theta, menu[order[k]], menu[order[k - 1]]);
            break;
        }
        case ModelKind::con_eu: {
            const auto [zmax, zmin] = detail::extreme_outcomes(menu);
            const auto den = detail::eu_difference_log(f, theta, zmax, zmin);
            for (std::size_t i = 0; i < n; ++i) {
                if (den.sign == 0) {
                    v[i] = 0.0;
                } else {
                    v[i] = detail::signed_ratio(detail::expected_utility_log(f, theta, menu[i]), den);
                }
            }
            break;
        }
        case ModelKind::rpm: break;
    }
    return v;
}

/// Softmax choice probabilities over a menu. Trembles are defined for pairs
/// only, so params.kappa is not used here.
inline std::vector<double> choice_prob_menu(ModelKind kind, UtilityFamily f, const ModelParams& params,
                                            const Menu& menu) {
    if (kind == ModelKind::rpm) throw InvalidArgument("menu probabilities are defined for RUM kinds only");
    params.validate();
    detail::check_menu(f, menu);
    const std::size_t n = menu.size();
    const double theta = params.theta;
    if (params.lambda == 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));

    // d_i = V_i - V_best <= 0, formed as a direct difference for the
    // utility-scale kinds.
    std::vector<double> d(n);
    const auto best = detail::rank_order(f, theta, menu).front();
    switch (kind) {
        case ModelKind::eu_rum:
            for (std::size_t i = 0; i < n; ++i) d[i] = detail::eu_difference_log(f, theta, menu[i], menu[best]).value();
            break;
        case ModelKind::con_eu: {
            const auto [zmax, zmin] = detail::extreme_outcomes(menu);
            for (std::size_t i = 0; i < n; ++i)
                d[i] = detail::contextual_difference(f, theta, menu[i], menu[best], zmax, zmin);
            break;
        }
        default: {
            const auto v = value_index(kind, f, theta, menu);
            for (std::size_t i = 0; i < n; ++i) d[i] = v[i] - v[best];
        }
    }
    std::vector<double> p(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += p[i] = std::exp(params.lambda * std::min(d[i], 0.0));
    for (auto& x : p) x /= total;
    return p;
}

/// Orientation of a pair for the random parameter model.
struct RpmOrientation {
    enum class Kind { threshold, x_dominates, y_dominates } kind = Kind::threshold;
    double threshold = 0.0;  // X preferred below, Y above
};

inline RpmOrientation rpm_orientation(UtilityFamily f, const Lottery& X, const Lottery& Y, const GridSpec& search = {}) {
    const auto crossings = indifference_thresholds(f, X, Y, search);
    if (crossings.size() > 1)
        throw OrientationError("random parameter model: pair has " + std::to_string(crossings.size()) +
                               " indifference crossings");
    const double probe = search.lo;
    const double d = certainty_equivalent(f, probe, X) - certainty_equivalent(f, probe, Y);
    if (crossings.empty()) {
        if (d >= 0.0) return {RpmOrientation::Kind::x_dominates, 0.0};
        return {RpmOrientation::Kind::y_dominates, 0.0};
    }
    if (d < 0.0)
        throw OrientationError("random parameter model: X is preferred above the indifference threshold");
    return {RpmOrientation::Kind::threshold, crossings.front()};
}

struct PairModelOptions {
    /// Evaluate Pi-based premia by interpolating a precomputed curve.
    bool interpolate_premium = false;
    /// Premium grid, also the search range for RPM thresholds.
    GridSpec grid{};
};

/// One lottery pair bound to a model kind, with whatever per-pair data the
/// kind needs (premium curve, RPM threshold) computed once.
class PairModel {
public:
    PairModel(ModelKind kind, UtilityFamily f, Lottery X, Lottery Y, PairModelOptions opt = {},
              std::shared_ptr<const PremiumCurve> curve = nullptr)
        : kind_(kind),
          family_(f),
          x_(std::move(X)),
          y_(std::move(Y)),
          zmax_(Lottery::degenerate(std::max(x_.max(), y_.max()))),
          zmin_(Lottery::degenerate(std::min(x_.min(), y_.min()))),
          opt_(opt),
          curve_(std::move(curve)) {
        check_support(f, x_);
        check_support(f, y_);
        if (kind_ == ModelKind::rpm) rpm_ = rpm_orientation(f, x_, y_, opt_.grid);
        if ((kind_ == ModelKind::pi_rum || kind_ == ModelKind::cum_pi_rum) && opt_.interpolate_premium && !curve_)
            curve_ = std::make_shared<const PremiumCurve>(build_premium_curve(f, x_, y_, opt_.grid));
    }

    ModelKind kind() const { return kind_; }
    UtilityFamily family() const { return family_; }
    const Lottery& x() const { return x_; }
    const Lottery& y() const { return y_; }
    const std::optional<RpmOrientation>& rpm() const { return rpm_; }

    /// V_X - V_Y for RUM kinds.
    double index_difference(double theta) const {
        switch (kind_) {
            case ModelKind::eu_rum: return detail::eu_difference_log(family_, theta, x_, y_).value();
            case ModelKind::ce_rum:
                return detail::ce_shifted(family_, theta, x_, 0.0) - detail::ce_shifted(family_, theta, y_, 0.0);
            case ModelKind::pi_rum:
            case ModelKind::cum_pi_rum:
                if (curve_) return -(*curve_)(theta);
                return -compensating_premium(family_, theta, x_, y_);
            case ModelKind::con_eu: return detail::contextual_difference(family_, theta, x_, y_, zmax_, zmin_);
            case ModelKind::rpm: break;
        }
        throw InvalidArgument("the random parameter model has no preference index");
    }

    /// Logit argument z with P(X) = logistic(z) before trembles; +-infinity
    /// for RPM dominance pairs.
    double logit(double theta, double lambda) const {
        // lambda = 0 is uniform random choice for every kind, dominance pairs included.
        if (lambda == 0.0) return 0.0;
        if (kind_ == ModelKind::rpm) {
            switch (rpm_->kind) {
                case RpmOrientation::Kind::x_dominates: return std::numeric_limits<double>::infinity();
                case RpmOrientation::Kind::y_dominates: return -std::numeric_limits<double>::infinity();
                case RpmOrientation::Kind::threshold:
                    if (rpm_->threshold == theta) return 0.0;
                    return lambda * (rpm_->threshold - theta);
            }
        }
        const double d = index_difference(theta);
        if (d == 0.0) return 0.0;
        return lambda * d;
    }

    /// Probability of choosing X before trembles.
    double base_probability(double theta, double lambda) const { return logistic(logit(theta, lambda)); }

    /// Probability of choosing X including trembles.
    double probability(const ModelParams& p) const { return tremble(base_probability(p.theta, p.lambda), p.kappa); }

    /// (P(X), P(Y)) including trembles, each formed without subtracting from
    /// one so that both keep full relative precision.
    std::pair<double, double> probabilities(const ModelParams& p) const {
        const double z = logit(p.theta, p.lambda);
        const double px = logistic(z), py = logistic(-z);
        return {(1.0 - p.kappa) * px + p.kappa * py, (1.0 - p.kappa) * py + p.kappa * px};
    }

private:
    ModelKind kind_;
    UtilityFamily family_;
    Lottery x_, y_, zmax_, zmin_;
    PairModelOptions opt_;
    std::shared_ptr<const PremiumCurve> curve_;
    std::optional<RpmOrientation> rpm_;
};

/// Probability of choosing X from the pair (X, Y), trembles included.
inline double choice_prob_pair(ModelKind kind, UtilityFamily f, const ModelParams& params, const Lottery& X,
                               const Lottery& Y, const PairModelOptions& opt = {}) {
    params.validate();
    return PairModel(kind, f, X, Y, opt).probability(params);
}

}  // namespace pirum
