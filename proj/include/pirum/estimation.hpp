#pragma once

// Maximum-likelihood estimation of (theta, lambda, kappa) on choice data in
// pooled, homoskedastic and heteroskedastic specifications.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/battery.hpp"
#include "pirum/choice_models.hpp"
#include "pirum/dataset.hpp"
#include "pirum/detail/csv.hpp"
#include "pirum/detail/parallel.hpp"
#include "pirum/detail/rng.hpp"
#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"
#include "pirum/optimize.hpp"
#include "pirum/premium.hpp"

namespace pirum {

enum class Scheme { pooled, homo, hetero };

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::pooled: return "pooled";
        case Scheme::homo: return "homo";
        case Scheme::hetero: return "hetero";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view s) {
    if (s == "pooled") return Scheme::pooled;
    if (s == "homo") return Scheme::homo;
    if (s == "hetero") return Scheme::hetero;
    throw InvalidArgument("unknown scheme '" + std::string(s) + "' (expected pooled|homo|hetero)");
}

struct OptimizerSettings {
    /// Global stage for three-parameter problems (pooled, per-subject hetero).
    int population = 50;
    int generations = 100;
    /// Global stage for the homoskedastic outer (lambda, kappa) problem.
    int outer_population = 16;
    int outer_generations = 12;
    double grad_tol = 1e-6;
    int max_iter = 200;
    std::uint64_t seed = 1;
    /// 0 uses every hardware thread.
    unsigned threads = 0;

    void validate() const {
        if (population < 2 || generations < 0 || outer_population < 2 || outer_generations < 0)
            throw InvalidArgument("optimizer population must be >= 2 and generations >= 0");
        if (!(grad_tol > 0.0) || max_iter < 1) throw InvalidArgument("local refinement settings must be positive");
    }
};

struct EstimationSpec {
    ModelKind model = ModelKind::pi_rum;
    UtilityFamily family = UtilityFamily::crra;
    Scheme scheme = Scheme::hetero;
    OptimizerSettings optimizer;
    /// Premium grid and theta search box; defaults to parameter_grid(family).
    std::optional<GridSpec> grid;
    /// Solve premia exactly instead of interpolating precomputed curves.
    bool exact_premium = false;

    GridSpec effective_grid() const { return grid.value_or(parameter_grid(family)); }

    void validate() const {
        optimizer.validate();
        effective_grid().size();
    }
};

// ---------------------------------------------------------------- transforms

inline constexpr double kappa_clamp = 1e-12;

/// (lambda, kappa) -> (log lambda, logit kappa), kappa clamped into
/// (1e-12, 1 - 1e-12) first.
inline std::pair<double, double> transform_params(double lambda, double kappa) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidArgument("kappa must lie in [0, 1]");
    const double k = std::clamp(kappa, kappa_clamp, 1.0 - kappa_clamp);
    return {std::log(lambda), std::log(k) - std::log1p(-k)};
}

inline std::pair<double, double> inverse_transform_params(double lambda_tilde, double kappa_tilde) {
    return {std::exp(lambda_tilde), logistic(kappa_tilde)};
}

/// Box for log lambda in the global stage. Index differences live on very
/// different scales across models.
inline std::pair<double, double> lambda_tilde_box(ModelKind k, const GridSpec& grid) {
    switch (k) {
        case ModelKind::eu_rum: return {-25.0, 80.0};
        case ModelKind::ce_rum:
        case ModelKind::pi_rum:
        case ModelKind::cum_pi_rum: return {-15.0, 5.0};
        case ModelKind::con_eu: return {-5.0, 12.0};
        case ModelKind::rpm: {
            const double shift = -std::log((grid.hi - grid.lo) / 40.0);
            return {-5.0 + shift, 10.0 + shift};
        }
    }
    return {-15.0, 15.0};
}

inline constexpr std::pair<double, double> kappa_tilde_box{-12.0, 0.0};

// ---------------------------------------------------------------- likelihood

inline constexpr double probability_floor = 1e-300;

/// Choice weights of one pair: X and Y counts, indifference split in halves.
struct PairCounts {
    std::size_t pair;
    double wx;
    double wy;
};

using Counts = std::vector<PairCounts>;

inline Counts subject_counts(const Subject& s) {
    Counts c;
    for (std::size_t k = 0; k < s.pairs.size(); ++k) {
        switch (s.responses[k]) {
            case Response::x: c.push_back({s.pairs[k], 1.0, 0.0}); break;
            case Response::y: c.push_back({s.pairs[k], 0.0, 1.0}); break;
            case Response::indifferent: c.push_back({s.pairs[k], 0.5, 0.5}); break;
        }
    }
    return c;
}

/// Counts summed over subjects; `multiplicity[i]` repeats subject i.
inline Counts pooled_counts(const ChoiceDataset& ds, const std::vector<int>* multiplicity = nullptr) {
    std::map<std::size_t, std::pair<double, double>> acc;
    for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
        const double m = multiplicity ? (*multiplicity)[i] : 1.0;
        if (m == 0.0) continue;
        for (const auto& c : subject_counts(ds.subjects[i])) {
            auto& a = acc[c.pair];
            a.first += m * c.wx;
            a.second += m * c.wy;
        }
    }
    Counts out;
    for (auto& [j, w] : acc) out.push_back({j, w.first, w.second});
    return out;
}

/// Pair models for a battery under one estimation spec; premium curves (if
/// any) are built here, once, before any parallel use.
class LikelihoodModel {
public:
    LikelihoodModel(const EstimationSpec& spec, const Battery& battery, PremiumCurveCache* cache = nullptr)
        : kind_(spec.model), family_(spec.family) {
        spec.validate();
        PairModelOptions opt;
        opt.grid = spec.effective_grid();
        opt.interpolate_premium = !spec.exact_premium;
        PremiumCurveCache local(opt.grid);
        pairs_ = battery_models(kind_, family_, battery, opt, cache ? cache : &local);
    }

    ModelKind kind() const { return kind_; }
    UtilityFamily family() const { return family_; }
    const std::vector<PairModel>& pairs() const { return pairs_; }

    double loglik(const Counts& counts, const ModelParams& p) const {
        double ll = 0.0;
        for (const auto& c : counts) {
            const auto [px, py] = pairs_[c.pair].probabilities(p);
            if (c.wx != 0.0) ll += c.wx * std::log(std::max(px, probability_floor));
            if (c.wy != 0.0) ll += c.wy * std::log(std::max(py, probability_floor));
        }
        return ll;
    }

private:
    ModelKind kind_;
    UtilityFamily family_;
    std::vector<PairModel> pairs_;
};

/// Total log-likelihood. `params` has one entry (pooled) or one per subject;
/// homoskedastic entries must share lambda and kappa.
inline double log_likelihood(const LikelihoodModel& model, Scheme scheme, const ChoiceDataset& ds,
                             const std::vector<ModelParams>& params) {
    ds.validate();
    for (const auto& p : params) p.validate();
    if (scheme == Scheme::pooled) {
        if (params.size() != 1) throw InvalidArgument("pooled likelihood takes exactly one parameter set");
        return model.loglik(pooled_counts(ds), params.front());
    }
    if (params.size() != ds.subjects.size())
        throw InvalidArgument("expected " + std::to_string(ds.subjects.size()) + " parameter sets, got " +
                              std::to_string(params.size()));
    if (scheme == Scheme::homo)
        for (const auto& p : params)
            if (p.lambda != params.front().lambda || p.kappa != params.front().kappa)
                throw InvalidArgument("homoskedastic parameter sets must share lambda and kappa");
    double ll = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) ll += model.loglik(subject_counts(ds.subjects[i]), params[i]);
    return ll;
}

inline double log_likelihood(const EstimationSpec& spec, const ChoiceDataset& ds, const std::vector<ModelParams>& params) {
    ds.validate();
    return log_likelihood(LikelihoodModel(spec, *ds.battery), spec.scheme, ds, params);
}

// ---------------------------------------------------------------- results

struct Estimate {
    std::string subject_id;
    double gamma = 0.0;
    double lambda = 0.0;
    double kappa = 0.0;
    double loglik = 0.0;
    double grad_norm = 0.0;
    bool converged = true;
    std::vector<std::string> flags;

    std::string flag() const {
        std::string out;
        for (const auto& f : flags) out += (out.empty() ? "" : "|") + f;
        return out;
    }

    bool has_flag(std::string_view f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

struct FitResult {
    ModelKind model = ModelKind::pi_rum;
    UtilityFamily family = UtilityFamily::crra;
    Scheme scheme = Scheme::hetero;
    std::vector<Estimate> estimates;  // one row for pooled fits
    double log_likelihood = 0.0;
    /// Outer/pooled local refinement status; per-subject status is in the rows.
    bool converged = true;
    double grad_norm = 0.0;
    std::string message;
    long evaluations = 0;

    std::size_t nonconverged() const {
        return static_cast<std::size_t>(
            std::count_if(estimates.begin(), estimates.end(), [](const Estimate& e) { return !e.converged; }));
    }
};

inline constexpr std::string_view fit_header = "subject_id,gamma,lambda,kappa,loglik,flag";

inline void write_fit_csv(std::ostream& os, const FitResult& fit) {
    os << fit_header << '\n';
    for (const auto& e : fit.estimates)
        os << e.subject_id << ',' << detail::fmt_double(e.gamma) << ',' << detail::fmt_double(e.lambda) << ','
           << detail::fmt_double(e.kappa) << ',' << detail::fmt_double(e.loglik) << ',' << e.flag() << '\n';
}

inline std::vector<Estimate> read_fit_csv(std::istream& in) {
    std::vector<Estimate> out;
    for (const auto& row : detail::read_csv(in, fit_header)) {
        try {
            Estimate e;
            e.subject_id = row.fields[0];
            e.gamma = detail::parse_double(row.fields[1], "gamma");
            e.lambda = detail::parse_double(row.fields[2], "lambda");
            e.kappa = detail::parse_double(row.fields[3], "kappa");
            e.loglik = detail::parse_double(row.fields[4], "loglik");
            if (!row.fields[5].empty())
                for (auto f : detail::split(row.fields[5], '|')) e.flags.emplace_back(f);
            e.converged = !e.has_flag("nonconverged");
            out.push_back(std::move(e));
        } catch (const ParseError& err) {
            throw ParseError(err.what(), row.line);
        }
    }
    return out;
}

// ---------------------------------------------------------------- fitting

namespace detail {

inline ModelParams params_from(const Vec& x) {
    const auto [lambda, kappa] = inverse_transform_params(x[1], x[2]);
    return {x[0], lambda, kappa};
}

inline bool at_edge(double theta, const GridSpec& g) {
    const double tol = 2.5e-4 * (g.hi - g.lo);
    return theta <= g.lo + tol || theta >= g.hi - tol;
}

inline Estimate make_estimate(std::string id, const ModelParams& p, double ll, const LocalResult& local,
                              const GridSpec& g) {
    Estimate e{std::move(id), p.theta, p.lambda, p.kappa, ll, local.grad_norm, local.converged, {}};
    if (at_edge(p.theta, g)) e.flags.emplace_back("edge");
    if (!local.converged) e.flags.emplace_back("nonconverged");
    return e;
}

// Global then local maximization of a three-parameter (theta, log lambda,
// logit kappa) objective.
template <class F>
std::pair<LocalResult, long> fit_three(F&& objective, const EstimationSpec& spec, std::uint64_t seed,
                                       std::optional<double> theta_start = std::nullopt) {
    const auto g = spec.effective_grid();
    const auto lb = lambda_tilde_box(spec.model, g);
    Bounds box{{g.lo, lb.first, kappa_tilde_box.first}, {g.hi, lb.second, kappa_tilde_box.second}};
    GaOptions ga;
    ga.population = spec.optimizer.population;
    ga.generations = spec.optimizer.generations;
    ga.seed = seed;
    if (theta_start) {
        for (double frac : {0.25, 0.5, 0.75})
            for (double kt : {-6.0, -3.0}) ga.initial.push_back({*theta_start, lb.first + frac * (lb.second - lb.first), kt});
    }
    const auto global = ga_maximize(objective, box, ga);
    LocalOptions lo;
    lo.grad_tol = spec.optimizer.grad_tol;
    lo.max_iter = spec.optimizer.max_iter;
    auto local = bfgs_maximize(objective, global.x, lo);
    long evals = global.evaluations + local.evaluations;
    // Seeded starts are refined too; the GA can settle in the wrong basin
    // when a near-deterministic fit with trembles competes with a noisy one.
    for (const auto& x0 : ga.initial) {
        auto alt = bfgs_maximize(objective, x0, lo);
        evals += alt.evaluations;
        if (alt.value > local.value) local = std::move(alt);
    }
    // Refinement may end a few ulps below the GA point it started from; only
    // a real loss falls back to the GA optimum.
    if (lower_beyond_rounding(local.value, global.value)) {
        local.x = global.x;
        local.value = global.value;
    }
    return {local, evals};
}

}  // namespace detail

/// Model-free starting values for theta: the midpoint of the threshold
/// interval with the fewest deterministic inconsistencies.
inline std::vector<double> switch_point_starts(const ChoiceDataset& ds, UtilityFamily f, const GridSpec& g) {
    std::vector<std::optional<double>> thr;
    for (const auto& bp : ds.battery->pairs())
        thr.push_back(ds.battery->family() == f ? bp.threshold : indifference_threshold(f, bp.x, bp.y, g, 1e-12));
    std::vector<double> cuts;
    for (auto& t : thr)
        if (t) cuts.push_back(*t);
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> cand;
    const double width = g.hi - g.lo;
    cand.push_back(cuts.empty() ? 0.0 : std::max(g.lo, cuts.front() - 0.05 * width));
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) cand.push_back(0.5 * (cuts[k] + cuts[k + 1]));
    if (!cuts.empty()) cand.push_back(std::min(g.hi, cuts.back() + 0.05 * width));
    std::vector<double> out;
    for (const auto& s : ds.subjects) {
        double best_err = std::numeric_limits<double>::infinity();
        std::vector<double> best;
        for (double th : cand) {
            double err = 0.0;
            for (std::size_t k = 0; k < s.pairs.size(); ++k) {
                const auto& t = thr[s.pairs[k]];
                if (!t || s.responses[k] == Response::indifferent) continue;
                const bool x_pref = th < *t;
                err += (s.responses[k] == Response::x) != x_pref;
            }
            if (err < best_err) {
                best_err = err;
                best.clear();
            }
            if (err == best_err) best.push_back(th);
        }
        out.push_back(best[best.size() / 2]);
    }
    return out;
}

inline FitResult fit_pooled(const LikelihoodModel& model, const EstimationSpec& spec, const ChoiceDataset& ds,
                            const std::vector<int>* multiplicity = nullptr) {
    const auto counts = pooled_counts(ds, multiplicity);
    auto objective = [&](const Vec& x) { return model.loglik(counts, detail::params_from(x)); };
    auto [local, evals] = detail::fit_three(objective, spec, spec.optimizer.seed);
    const auto p = detail::params_from(local.x);
    FitResult out{spec.model, spec.family, Scheme::pooled, {}, local.value, local.converged, local.grad_norm,
                  local.message, evals};
    out.estimates.push_back(detail::make_estimate("pooled", p, local.value, local, spec.effective_grid()));
    return out;
}

inline FitResult fit_hetero(const LikelihoodModel& model, const EstimationSpec& spec, const ChoiceDataset& ds) {
    const std::size_t n = ds.subjects.size();
    std::vector<Estimate> rows(n);
    std::vector<long> evals(n);
    const auto starts = switch_point_starts(ds, spec.family, spec.effective_grid());
    detail::parallel_for(n, spec.optimizer.threads, [&](std::size_t i) {
        try {
            const auto counts = subject_counts(ds.subjects[i]);
            auto objective = [&](const Vec& x) { return model.loglik(counts, detail::params_from(x)); };
            auto [local, ev] =
                detail::fit_three(objective, spec, detail::stream_seed(spec.optimizer.seed, i), starts[i]);
            rows[i] = detail::make_estimate(ds.subjects[i].id, detail::params_from(local.x), local.value, local,
                                            spec.effective_grid());
            evals[i] = ev;
        } catch (const Error& e) {
            throw Error("subject " + ds.subjects[i].id + ": " + e.what());
        }
    });
    FitResult out{spec.model, spec.family, Scheme::hetero, std::move(rows), 0.0, true, 0.0, "independent subject fits", 0};
    for (std::size_t i = 0; i < n; ++i) {
        out.log_likelihood += out.estimates[i].loglik;
        out.evaluations += evals[i];
    }
    out.converged = out.nonconverged() == 0;
    return out;
}

/// Shared (lambda, kappa) with per-subject theta. The outer problem runs a
/// small GA and BFGS; each outer evaluation solves every subject's theta by
/// 1-D BFGS started from the thetas of the best (GA) or current (BFGS) outer
/// point, and again from the subject's switch point, keeping the better.
inline FitResult fit_homo(const LikelihoodModel& model, const EstimationSpec& spec, const ChoiceDataset& ds) {
    const std::size_t n = ds.subjects.size();
    const auto g = spec.effective_grid();
    std::vector<Counts> counts;
    for (const auto& s : ds.subjects) counts.push_back(subject_counts(s));
    const std::vector<double> fixed_start = switch_point_starts(ds, spec.family, g);

    LocalOptions inner_opt;
    inner_opt.grad_tol = spec.optimizer.grad_tol;
    inner_opt.max_iter = spec.optimizer.max_iter;
    inner_opt.max_step = 0.25 * (g.hi - g.lo);

    struct Inner {
        std::vector<LocalResult> rows;
        double total = 0.0;
    };
    auto solve_inner = [&](const Vec& y, const std::vector<double>& warm) {
        const auto [lambda, kappa] = inverse_transform_params(y[0], y[1]);
        Inner r;
        r.rows.resize(n);
        detail::parallel_for(n, spec.optimizer.threads, [&](std::size_t i) {
            // Outside the box the objective continues with a quadratic
            // penalty, keeping theta out of flat extrapolated tails.
            auto f = [&](const Vec& t) {
                const double c = std::clamp(t[0], g.lo, g.hi);
                return model.loglik(counts[i], {c, lambda, kappa}) - (t[0] - c) * (t[0] - c);
            };
            auto a = bfgs_maximize(f, Vec{warm[i]}, inner_opt);
            if (warm[i] != fixed_start[i]) {
                auto b = bfgs_maximize(f, Vec{fixed_start[i]}, inner_opt);
                if (b.value > a.value) a = std::move(b);
            }
            a.x[0] = std::clamp(a.x[0], g.lo, g.hi);
            r.rows[i] = std::move(a);
        });
        for (const auto& row : r.rows) r.total += row.value;
        return r;
    };
    auto thetas_of = [&](const Inner& in) {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = in.rows[i].x[0];
        return t;
    };

    std::vector<double> warm = fixed_start;
    double best_value = -std::numeric_limits<double>::infinity();
    auto global_objective = [&](const Vec& y) {
        const auto in = solve_inner(y, warm);
        if (in.total > best_value) {
            best_value = in.total;
            warm = thetas_of(in);
        }
        return in.total;
    };

    const auto lb = lambda_tilde_box(spec.model, g);
    Bounds box{{lb.first, kappa_tilde_box.first}, {lb.second, kappa_tilde_box.second}};
    GaOptions ga;
    ga.population = spec.optimizer.outer_population;
    ga.generations = spec.optimizer.outer_generations;
    ga.seed = spec.optimizer.seed;
    const auto global = ga_maximize(global_objective, box, ga);

    // Local stage: the warm start moves only when BFGS accepts a step, so
    // finite differences at one iterate all see the same inner problem.
    std::vector<double> current = warm;
    std::vector<double> pending = warm;
    auto local_objective = [&](const Vec& y) {
        const auto in = solve_inner(y, current);
        pending = thetas_of(in);
        return in.total;
    };
    LocalOptions outer_opt;
    outer_opt.grad_tol = spec.optimizer.grad_tol;
    outer_opt.max_iter = spec.optimizer.max_iter;
    auto local = bfgs_maximize(local_objective, global.x, outer_opt, [&](const Vec&) { current = pending; });

    Vec y = local.x;
    std::vector<double> start = current;
    if (detail::lower_beyond_rounding(local.value, global.value)) {
        y = global.x;
        start = warm;
    }
    const auto final_inner = solve_inner(y, start);
    const auto [lambda, kappa] = inverse_transform_params(y[0], y[1]);
    FitResult out{spec.model, spec.family, Scheme::homo, {}, final_inner.total, local.converged, local.grad_norm,
                  local.message, global.evaluations + local.evaluations};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = final_inner.rows[i];
        out.estimates.push_back(
            detail::make_estimate(ds.subjects[i].id, {row.x[0], lambda, kappa}, row.value, row, g));
    }
    return out;
}

inline FitResult fit(const LikelihoodModel& model, const EstimationSpec& spec, const ChoiceDataset& ds) {
    spec.validate();
    ds.validate();
    if (ds.subjects.empty()) throw InvalidArgument("dataset has no subjects");
    if (model.kind() != spec.model || model.family() != spec.family)
        throw InvalidArgument("likelihood model does not match the estimation spec");
    switch (spec.scheme) {
        case Scheme::pooled: return fit_pooled(model, spec, ds);
        case Scheme::homo: return fit_homo(model, spec, ds);
        case Scheme::hetero: return fit_hetero(model, spec, ds);
    }
    throw InvalidArgument("unknown scheme");
}

inline FitResult fit(const EstimationSpec& spec, const ChoiceDataset& ds) {
    ds.validate();
    return fit(LikelihoodModel(spec, *ds.battery), spec, ds);
}

// ---------------------------------------------------------------- bootstrap

struct BootstrapResult {
    std::vector<std::string> names;
    Vec estimate;  // full-sample point estimate
    Vec se;
    int reps = 0;
    int failed = 0;
    std::vector<Vec> draws;
};

namespace detail {

inline Vec bootstrap_params(const FitResult& f) {
    const auto& e = f.estimates.front();
    if (f.scheme == Scheme::pooled) return {e.gamma, e.lambda, e.kappa};
    return {e.lambda, e.kappa};
}

}  // namespace detail

/// Subjects resampled with replacement; replicate r draws from substream r
/// of `seed`. Standard errors are sample standard deviations over the
/// successful replicates.
inline BootstrapResult block_bootstrap(const LikelihoodModel& model, const EstimationSpec& spec, const ChoiceDataset& ds,
                                       int reps, std::uint64_t seed) {
    if (spec.scheme == Scheme::hetero)
        throw InvalidArgument("bootstrap needs a scheme with shared parameters (pooled or homo)");
    if (reps < 2) throw InvalidArgument("bootstrap needs at least 2 replicates; the standard deviation of one is undefined");
    const std::size_t n = ds.subjects.size();
    if (n == 0) throw InvalidArgument("dataset has no subjects");

    BootstrapResult out;
    out.names = spec.scheme == Scheme::pooled ? std::vector<std::string>{"gamma", "lambda", "kappa"}
                                              : std::vector<std::string>{"lambda", "kappa"};
    out.reps = reps;
    out.estimate = detail::bootstrap_params(fit(model, spec, ds));

    std::vector<std::optional<Vec>> draws(static_cast<std::size_t>(reps));
    EstimationSpec rep_spec = spec;
    rep_spec.optimizer.threads = 1;
    detail::parallel_for(draws.size(), spec.optimizer.threads, [&](std::size_t r) {
        detail::Rng rng(detail::stream_seed(seed, r));
        EstimationSpec s = rep_spec;
        s.optimizer.seed = detail::stream_seed(seed ^ 0x5bd1e995ULL, r);
        try {
            if (spec.scheme == Scheme::pooled) {
                std::vector<int> mult(n, 0);
                for (std::size_t k = 0; k < n; ++k) ++mult[rng.below(n)];
                draws[r] = detail::bootstrap_params(fit_pooled(model, s, ds, &mult));
            } else {
                ChoiceDataset rs{ds.battery, {}};
                for (std::size_t k = 0; k < n; ++k) rs.subjects.push_back(ds.subjects[rng.below(n)]);
                draws[r] = detail::bootstrap_params(fit_homo(model, s, rs));
            }
        } catch (const Error&) {
            draws[r].reset();
        }
    });
    for (auto& d : draws) {
        if (d) out.draws.push_back(*d);
        else ++out.failed;
    }
    if (out.draws.size() < 2)
        throw ConvergenceError("bootstrap: only " + std::to_string(out.draws.size()) + " of " + std::to_string(reps) +
                               " replicates succeeded");
    const std::size_t k = out.names.size();
    out.se.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0;
        for (const auto& d : out.draws) mean += d[j];
        mean /= static_cast<double>(out.draws.size());
        double ss = 0.0;
        for (const auto& d : out.draws) ss += (d[j] - mean) * (d[j] - mean);
        out.se[j] = std::sqrt(ss / static_cast<double>(out.draws.size() - 1));
    }
    return out;
}

inline constexpr std::string_view summary_header = "model,gamma,se_gamma,lambda,se_lambda,kappa,se_kappa";

/// One summary row; gamma columns stay empty for homoskedastic results.
inline void write_summary_row(std::ostream& os, ModelKind model, const BootstrapResult& b) {
    os << to_string(model) << ',';
    if (b.names.size() == 3) {
        os << detail::fmt_double(b.estimate[0]) << ',' << detail::fmt_double(b.se[0]) << ','
           << detail::fmt_double(b.estimate[1]) << ',' << detail::fmt_double(b.se[1]) << ','
           << detail::fmt_double(b.estimate[2]) << ',' << detail::fmt_double(b.se[2]) << '\n';
    } else {
        os << ",," << detail::fmt_double(b.estimate[0]) << ',' << detail::fmt_double(b.se[0]) << ','
           << detail::fmt_double(b.estimate[1]) << ',' << detail::fmt_double(b.se[1]) << '\n';
    }
}

struct SummaryRow {
    std::string model;
    std::optional<double> gamma, se_gamma;
    double lambda, se_lambda, kappa, se_kappa;
};

inline std::vector<SummaryRow> read_summary_csv(std::istream& in) {
    std::vector<SummaryRow> out;
    for (const auto& row : detail::read_csv(in, summary_header)) {
        try {
            const auto& c = row.fields;
            auto opt = [](const std::string& s, std::string_view what) -> std::optional<double> {
                if (s.empty()) return std::nullopt;
                return detail::parse_double(s, what);
            };
            out.push_back({c[0], opt(c[1], "gamma"), opt(c[2], "se_gamma"), detail::parse_double(c[3], "lambda"),
                           detail::parse_double(c[4], "se_lambda"), detail::parse_double(c[5], "kappa"),
                           detail::parse_double(c[6], "se_kappa")});
        } catch (const ParseError& e) {
            throw ParseError(e.what(), row.line);
        }
    }
    return out;
}

// ---------------------------------------------------------------- post-processing

/// Feasible theta interval of a subject whose answers agree with a
/// noiseless agent (X below each threshold, Y above, X on dominance pairs).
/// Subjects with any indifference answer are not treated as consistent.
struct ConsistentInterval {
    double lo;
    double hi;
};

inline std::optional<ConsistentInterval> consistent_interval(const Subject& s, const Battery& battery) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.pairs.size(); ++k) {
        const auto& t = battery[s.pairs[k]].threshold;
        const auto r = s.responses[k];
        if (r == Response::indifferent) return std::nullopt;
        if (!t) {
            if (r == Response::y) return std::nullopt;
            continue;
        }
        if (r == Response::x) hi = std::min(hi, *t);
        else lo = std::max(lo, *t);
    }
    if (!(lo < hi)) return std::nullopt;
    return ConsistentInterval{lo, hi};
}

/// Replaces the theta of consistent subjects in a heteroskedastic fit: the
/// midpoint of an interior interval, +extreme above the highest threshold,
/// -extreme below the lowest. Other fits are returned unchanged.
inline FitResult postprocess_consistent(FitResult fit, const ChoiceDataset& ds, double extreme = 5.0) {
    if (fit.scheme != Scheme::hetero) return fit;
    std::map<std::string, const Subject*> by_id;
    for (const auto& s : ds.subjects) by_id[s.id] = &s;
    for (auto& e : fit.estimates) {
        auto it = by_id.find(e.subject_id);
        if (it == by_id.end()) continue;
        const auto iv = consistent_interval(*it->second, *ds.battery);
        if (!iv) continue;
        if (std::isinf(iv->lo) && std::isinf(iv->hi)) continue;
        if (std::isinf(iv->lo)) {
            e.gamma = -extreme;
            e.flags.emplace_back("consistent_low");
        } else if (std::isinf(iv->hi)) {
            e.gamma = extreme;
            e.flags.emplace_back("consistent_high");
        } else {
            e.gamma = 0.5 * (iv->lo + iv->hi);
            e.flags.emplace_back("consistent_mid");
        }
    }
    return fit;
}

// ---------------------------------------------------------------- diagnostics

/// Log-likelihood of one count vector along a theta grid at fixed (lambda, kappa).
inline std::vector<double> profile_loglik(const LikelihoodModel& model, const Counts& counts,
                                          const std::vector<double>& thetas, double lambda, double kappa) {
    std::vector<double> out;
    out.reserve(thetas.size());
    for (double th : thetas) out.push_back(model.loglik(counts, {th, lambda, kappa}));
    return out;
}

/// Local maxima of a sampled curve. Runs of values equal within `tol`
/// (relative) count as one point; end runs count when their only neighbour
/// is lower.
inline int count_local_maxima(const std::vector<double>& v, double tol = 1e-9) {
    if (v.empty()) return 0;
    std::vector<double> runs{v.front()};
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i] - runs.back()) > tol * (1.0 + std::abs(runs.back()))) runs.push_back(v[i]);
    if (runs.size() == 1) return 1;
    int count = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const bool left = i == 0 || runs[i - 1] < runs[i];
        const bool right = i + 1 == runs.size() || runs[i + 1] < runs[i];
        count += left && right;
    }
    return count;
}

/// For each model, the number of subjects whose log-likelihood is maximal
/// (within `tol`) under that model. Ties credit every maximizing model.
inline std::vector<int> best_model_counts(const std::vector<FitResult>& fits, double tol = 1e-6) {
    if (fits.empty()) return {};
    const std::size_t n = fits.front().estimates.size();
    for (const auto& f : fits)
        if (f.estimates.size() != n) throw InvalidArgument("fits cover different numbers of subjects");
    std::vector<int> counts(fits.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& f : fits) best = std::max(best, f.estimates[i].loglik);
        for (std::size_t m = 0; m < fits.size(); ++m)
            if (fits[m].estimates[i].loglik >= best - tol) ++counts[m];
    }
    return counts;
}

}  // namespace pirum
