#include <catch_amalgamated.hpp>

#include <cmath>

#include "pirum/optimize.hpp"

using namespace pirum;
using Catch::Matchers::WithinAbs;

TEST_CASE("bounds validation") {
    CHECK_THROWS_AS((Bounds{{}, {}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((Bounds{{0.0}, {0.0, 1.0}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((Bounds{{1.0}, {0.0}}.validate()), InvalidArgument);
    CHECK(Bounds{{0.0, 0.0}, {1.0, 1.0}}.clamp({2.0, -1.0}) == Vec{1.0, 0.0});
    GaOptions bad;
    bad.population = 1;
    CHECK_THROWS_AS(ga_maximize([](const Vec&) { return 0.0; }, Bounds{{0.0}, {1.0}}, bad), InvalidArgument);
    bad = {};
    bad.elite = bad.population;
    CHECK_THROWS_AS(ga_maximize([](const Vec&) { return 0.0; }, Bounds{{0.0}, {1.0}}, bad), InvalidArgument);
}

TEST_CASE("genetic algorithm finds the global peak of a multimodal function") {
    // Rastrigin (negated): many local maxima, global at the origin.
    auto f = [](const Vec& x) {
        double s = 0.0;
        for (double v : x) s += v * v - 10.0 * std::cos(2.0 * M_PI * v) + 10.0;
        return -s;
    };
    GaOptions opt;
    opt.population = 80;
    opt.generations = 200;
    opt.seed = 3;
    const auto r = ga_maximize(f, Bounds{{-5.12, -5.12}, {5.12, 5.12}}, opt);
    const auto polished = bfgs_maximize(f, r.x);
    CHECK_THAT(polished.x[0], WithinAbs(0.0, 1e-5));
    CHECK_THAT(polished.x[1], WithinAbs(0.0, 1e-5));
    CHECK(r.evaluations == 80 + 200 * (80 - 2));
    // Determinism for a given seed.
    CHECK(ga_maximize(f, Bounds{{-5.12, -5.12}, {5.12, 5.12}}, opt).x == r.x);
}

TEST_CASE("genetic algorithm keeps seeded individuals and ignores non-finite values") {
    auto f = [](const Vec& x) { return x[0] > 0.5 ? NAN : -(x[0] - 0.3) * (x[0] - 0.3); };
    GaOptions opt;
    opt.generations = 0;
    opt.initial = {{0.3}};
    const auto r = ga_maximize(f, Bounds{{0.0}, {1.0}}, opt);
    CHECK(r.x == Vec{0.3});
    CHECK(r.value == 0.0);
}

TEST_CASE("BFGS solves Rosenbrock") {
    auto f = [](const Vec& x) { return -(100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2)); };
    LocalOptions opt;
    opt.max_iter = 500;
    const auto r = bfgs_maximize(f, {-1.2, 1.0}, opt);
    INFO(r.message);
    CHECK(r.converged);
    CHECK(r.grad_norm < 1e-6);
    CHECK_THAT(r.x[0], WithinAbs(1.0, 1e-5));
    CHECK_THAT(r.x[1], WithinAbs(1.0, 1e-5));
}

TEST_CASE("BFGS reports non-convergence instead of throwing") {
    auto f = [](const Vec& x) { return -(100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2)); };
    LocalOptions opt;
    opt.max_iter = 3;
    LocalResult r;
    REQUIRE_NOTHROW(r = bfgs_maximize(f, {-1.2, 1.0}, opt));
    CHECK_FALSE(r.converged);
    CHECK(r.message == "iteration limit reached");
    CHECK(r.grad_norm > 1e-6);

    // Unbounded objective: steps are capped and the run ends without throwing.
    const auto up = bfgs_maximize([](const Vec& x) { return x[0]; }, {0.0}, opt);
    CHECK_FALSE(up.converged);
    CHECK(up.x[0] > 0.0);
    CHECK(up.x[0] <= 3 * LocalOptions{}.max_step + 1e-9);

    const auto bad = bfgs_maximize([](const Vec&) { return NAN; }, {0.0});
    CHECK_FALSE(bad.converged);
    CHECK(bad.message == "objective not finite at the starting point");
}

TEST_CASE("BFGS reaches the gradient tolerance when the objective is flat to rounding") {
    // A steep, large-valued peak: near the optimum the attainable gain is
    // below the rounding of f while the gradient is still resolved.
    auto f = [](const Vec& x) {
        const double a = x[0] - 0.7071, b = x[1] + 5.83;
        return -4495.5 - 4000.0 * a * a - 30.0 * b * b - 200.0 * a * b;
    };
    const auto r = bfgs_maximize(f, {0.72, -5.8});
    INFO(r.message << " " << r.grad_norm);
    CHECK(r.converged);
    CHECK_THAT(r.x[0], WithinAbs(0.7071, 1e-8));
    CHECK_THAT(r.x[1], WithinAbs(-5.83, 1e-7));
}

TEST_CASE("central differences") {
    const auto g = numeric_gradient([](const Vec& x) { return x[0] * x[0] * x[1]; }, {2.0, 3.0}, 1e-6);
    CHECK_THAT(g[0], WithinAbs(12.0, 1e-6));
    CHECK_THAT(g[1], WithinAbs(4.0, 1e-6));
    const auto h = numeric_gradient([](const Vec& x) { return x[0] > 0 ? INFINITY : 0.0; }, {0.0}, 1e-6);
    CHECK(h[0] == 0.0);
}

TEST_CASE("on_accept sees every accepted step") {
    int calls = 0;
    const auto r = bfgs_maximize([](const Vec& x) { return -(x[0] - 1.0) * (x[0] - 1.0); }, {0.0}, {},
                                 [&](const Vec&) { ++calls; });
    CHECK(r.converged);
    CHECK(calls == r.iterations);
}
