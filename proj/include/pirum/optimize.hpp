#pragma once

// Maximizers used by the estimators: a real-coded genetic algorithm for the
// global stage and BFGS with central-difference gradients for refinement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pirum/detail/rng.hpp"
#include "pirum/errors.hpp"

namespace pirum {

using Vec = std::vector<double>;

struct Bounds {
    Vec lo, hi;

    std::size_t size() const { return lo.size(); }

    void validate() const {
        if (lo.empty() || lo.size() != hi.size()) throw InvalidArgument("bounds need matching non-empty lo/hi");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw InvalidArgument("bounds need lo < hi in every coordinate");
    }

    Vec clamp(Vec x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
        return x;
    }
};

struct GaOptions {
    int population = 50;
    int generations = 100;
    int elite = 2;
    int tournament = 3;
    double crossover_rate = 0.9;
    double mutation_rate = 0.2;
    /// Initial mutation standard deviation as a fraction of the box width;
    /// shrinks linearly to a tenth of that over the run.
    double mutation_scale = 0.1;
    std::uint64_t seed = 1;
    /// Extra individuals placed into the first generation.
    std::vector<Vec> initial;

    void validate() const {
        if (population < 2 || generations < 0 || elite < 0 || elite >= population || tournament < 1)
            throw InvalidArgument("genetic algorithm settings must be positive (population >= 2, elite < population)");
    }
};

struct GaResult {
    Vec x;
    double value = -std::numeric_limits<double>::infinity();
    long evaluations = 0;
};

namespace detail {

inline double finite_or_worst(double v) { return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity(); }

/// a < b by more than the rounding of sums of this size.
inline bool lower_beyond_rounding(double a, double b) {
    return a < b - 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(b));
}

}  // namespace detail

/// Maximizes f over the box. Deterministic for a given seed.
template <class F>
GaResult ga_maximize(F&& f, const Bounds& box, const GaOptions& opt) {
    box.validate();
    opt.validate();
    const std::size_t dim = box.size();
    const auto pop_n = static_cast<std::size_t>(opt.population);
    detail::Rng rng(opt.seed);
    GaResult best;

    std::vector<Vec> pop;
    for (std::size_t k = 0; k < opt.initial.size() && pop.size() < pop_n; ++k) {
        if (opt.initial[k].size() != dim) throw InvalidArgument("initial individual has the wrong dimension");
        pop.push_back(box.clamp(opt.initial[k]));
    }
    while (pop.size() < pop_n) {
        Vec x(dim);
        for (std::size_t i = 0; i < dim; ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
        pop.push_back(std::move(x));
    }
    std::vector<double> fit(pop_n);
    auto evaluate = [&](std::size_t k) {
        fit[k] = detail::finite_or_worst(f(pop[k]));
        ++best.evaluations;
        if (fit[k] > best.value || best.x.empty()) {
            best.value = fit[k];
            best.x = pop[k];
        }
    };
    for (std::size_t k = 0; k < pop_n; ++k) evaluate(k);

    std::vector<std::size_t> order(pop_n);
    for (int gen = 0; gen < opt.generations; ++gen) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a] > fit[b]; });
        auto pick = [&] {
            std::size_t w = rng.below(pop_n);
            for (int t = 1; t < opt.tournament; ++t) {
                const std::size_t c = rng.below(pop_n);
                if (fit[c] > fit[w]) w = c;
            }
            return w;
        };
        const double scale = opt.mutation_scale * (1.0 - 0.9 * gen / std::max(1, opt.generations - 1));
        std::vector<Vec> next;
        std::vector<double> next_fit;
        for (int e = 0; e < opt.elite; ++e) {
            next.push_back(pop[order[e]]);
            next_fit.push_back(fit[order[e]]);
        }
        while (next.size() < pop_n) {
            const Vec& a = pop[pick()];
            const Vec& b = pop[pick()];
            Vec child = a;
            if (rng.uniform() < opt.crossover_rate) {
                // BLX-0.5
                for (std::size_t i = 0; i < dim; ++i) {
                    const double lo = std::min(a[i], b[i]), hi = std::max(a[i], b[i]);
                    const double ext = 0.5 * (hi - lo);
                    child[i] = rng.uniform(lo - ext, hi + ext);
                }
            }
            for (std::size_t i = 0; i < dim; ++i)
                if (rng.uniform() < opt.mutation_rate) child[i] += scale * (box.hi[i] - box.lo[i]) * rng.normal();
            next.push_back(box.clamp(std::move(child)));
            next_fit.push_back(0.0);
        }
        pop = std::move(next);
        fit = std::move(next_fit);
        for (std::size_t k = static_cast<std::size_t>(opt.elite); k < pop_n; ++k) evaluate(k);
    }
    return best;
}

struct LocalOptions {
    /// Stop when the Euclidean norm of the gradient falls below this.
    double grad_tol = 1e-6;
    int max_iter = 200;
    /// Central-difference step is fd_step * (1 + |x_i|).
    double fd_step = 1e-6;
    /// Longest step tried by the line search.
    double max_step = 5.0;
};

struct LocalResult {
    Vec x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    long evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Central-difference gradient.
template <class F>
Vec numeric_gradient(F&& f, const Vec& x, double step, long* evaluations = nullptr) {
    Vec g(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step * (1.0 + std::abs(x[i]));
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
        if (!std::isfinite(g[i])) g[i] = 0.0;
    }
    if (evaluations) *evaluations += 2 * static_cast<long>(x.size());
    return g;
}

/// BFGS ascent with Armijo backtracking. Never throws on non-convergence;
/// the result carries the final gradient norm and a message instead.
/// `on_accept` runs after every accepted step (before the next gradient).
template <class F>
LocalResult bfgs_maximize(F&& f, Vec x0, const LocalOptions& opt = {},
                          const std::function<void(const Vec&)>& on_accept = {}) {
    const std::size_t n = x0.size();
    LocalResult r;
    r.x = std::move(x0);
    auto eval = [&](const Vec& x) {
        ++r.evaluations;
        return detail::finite_or_worst(f(x));
    };
    auto norm = [](const Vec& v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    r.value = eval(r.x);
    if (!std::isfinite(r.value)) {
        r.message = "objective not finite at the starting point";
        return r;
    }
    Vec g = numeric_gradient(f, r.x, opt.fd_step, &r.evaluations);
    std::vector<double> H(n * n, 0.0);
    auto reset = [&] {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
    };
    reset();
    bool scaled = false;

    for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
        r.grad_norm = norm(g);
        if (r.grad_norm < opt.grad_tol) {
            r.converged = true;
            r.message = "gradient norm below tolerance";
            return r;
        }
        Vec d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i] += H[i * n + j] * g[j];
        double slope = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
        if (!(slope > 0.0)) {
            reset();
            d = g;
            slope = r.grad_norm * r.grad_norm;
        }
        double a = 1.0;
        const double dn = norm(d);
        if (dn * a > opt.max_step) a = opt.max_step / dn;
        Vec x1(n);
        double f1 = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        Vec g1;
        // Strict increase: once a*slope is below the rounding of f, a plain
        // Armijo test would accept null steps forever.
        for (int k = 0; k < 60; ++k) {
            for (std::size_t i = 0; i < n; ++i) x1[i] = r.x[i] + a * d[i];
            f1 = eval(x1);
            if (f1 > r.value && f1 >= r.value + 1e-4 * a * slope) {
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted) {
            // Near the optimum f can be flat to rounding while the gradient is
            // still resolved. Take the full step as a secant step on the
            // gradient if it shrinks the gradient without a loss beyond rounding.
            a = std::min(1.0, opt.max_step / dn);
            for (std::size_t i = 0; i < n; ++i) x1[i] = r.x[i] + a * d[i];
            f1 = eval(x1);
            if (!detail::lower_beyond_rounding(f1, r.value)) {
                g1 = numeric_gradient(f, x1, opt.fd_step, &r.evaluations);
                accepted = norm(g1) < r.grad_norm;
            }
            if (!accepted) {
                r.message = "line search made no progress";
                return r;
            }
        }
        if (on_accept) on_accept(x1);
        if (g1.empty()) g1 = numeric_gradient(f, x1, opt.fd_step, &r.evaluations);
        Vec s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x1[i] - r.x[i];
            y[i] = g[i] - g1[i];  // gradient change of -f
        }
        const double ys = std::inner_product(y.begin(), y.end(), s.begin(), 0.0);
        const double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
        if (ys > 1e-12 * norm(s) * std::sqrt(yy)) {
            if (!scaled) {
                for (auto& h : H) h *= ys / yy;
                scaled = true;
            }
            const double rho = 1.0 / ys;
            Vec Hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
            const double yHy = std::inner_product(y.begin(), y.end(), Hy.begin(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H[i * n + j] += (1.0 + rho * yHy) * rho * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
        }
        r.x = std::move(x1);
        r.value = f1;
        g = std::move(g1);
    }
    r.grad_norm = norm(g);
    r.converged = r.grad_norm < opt.grad_tol;
    r.message = r.converged ? "gradient norm below tolerance" : "iteration limit reached";
    return r;
}

}  // namespace pirum
