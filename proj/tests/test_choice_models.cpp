#include <catch_amalgamated.hpp>

#include <cmath>

#include "pirum/battery.hpp"
#include "pirum/choice_models.hpp"
#include "pirum/dataset.hpp"
#include "support/oracles.hpp"

using namespace pirum;
using Catch::Matchers::WithinAbs;

namespace {

const Lottery hump_x = Lottery::uniform({12.0, 9.0, 4.0});
const Lottery hump_y({10.0, 4.0}, {2.0 / 3.0, 1.0 / 3.0});

const Lottery X1 = Lottery::degenerate(4.0);
const Lottery X2 = Lottery::uniform({1.0, 10.0});
const Lottery X3 = Lottery::uniform({2.0, 3.0});

constexpr ModelKind rum_kinds[] = {ModelKind::eu_rum, ModelKind::ce_rum, ModelKind::pi_rum, ModelKind::cum_pi_rum,
                                   ModelKind::con_eu};
constexpr ModelKind all_kinds[] = {ModelKind::eu_rum,     ModelKind::ce_rum, ModelKind::pi_rum,
                                   ModelKind::cum_pi_rum, ModelKind::rpm,    ModelKind::con_eu};

// Binary pair satisfying the spread condition of the binary-pair result.
std::pair<Lottery, Lottery> ordered_binary_pair(oracle::Gen& g) {
    const double p = g.uniform(0.05, 0.95);
    const double a = g.uniform(1.0, 15.0), b = g.uniform(a + 0.5, 20.0);
    const double c = g.uniform(1.0, 19.0);
    const double d = c + g.uniform(0.01, 0.99) * std::min(b - a, 20.0 - c);
    return {Lottery({a, b}, {p, 1.0 - p}), Lottery({c, d}, {p, 1.0 - p})};
}

}  // namespace

TEST_CASE("model names and spec strings") {
    for (auto k : all_kinds) CHECK(parse_model_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_model_kind("probit"), InvalidArgument);
    const auto s = ModelSpec::parse("model=pi; family=crra; gamma=0.7; lambda=0.003; kappa=0.05");
    CHECK(s.kind == ModelKind::pi_rum);
    CHECK(s.params.theta == 0.7);
    CHECK(s.params.lambda == 0.003);
    CHECK(s.params.kappa == 0.05);
    const auto again = ModelSpec::parse(s.to_string());
    CHECK(again.params.theta == s.params.theta);
    CHECK(again.family == s.family);
    CHECK_THROWS_AS(ModelSpec::parse("family=crra"), ParseError);
    CHECK_THROWS_AS(ModelSpec::parse("model=pi;color=red"), ParseError);
    CHECK_THROWS_AS(ModelSpec::parse("model=pi;lambda"), ParseError);
    CHECK_THROWS_AS(ModelSpec::parse("model=pi;lambda=-1"), InvalidArgument);
    CHECK_THROWS_AS(ModelSpec::parse("model=pi;kappa=1.5"), InvalidArgument);
}

TEST_CASE("lambda = 0 is random choice for every kind") {
    const auto dominance = std::make_pair(Lottery::degenerate(3850.0), Lottery::degenerate(2000.0));
    for (auto k : all_kinds) {
        INFO(to_string(k));
        CHECK(choice_prob_pair(k, UtilityFamily::crra, {2.0, 0.0, 0.0}, hump_x, hump_y) == 0.5);
        CHECK(choice_prob_pair(k, UtilityFamily::crra, {2.0, 0.0, 0.1}, dominance.first, dominance.second) == 0.5);
    }
    for (auto k : rum_kinds) {
        const auto p = choice_prob_menu(k, UtilityFamily::crra, {1.0, 0.0, 0.0}, {X1, X2, X3});
        for (double v : p) CHECK_THAT(v, WithinAbs(1.0 / 3.0, 1e-15));
    }
}

TEST_CASE("kappa = 1/2 is random choice for every kind") {
    for (auto k : all_kinds) {
        INFO(to_string(k));
        for (double th : {-3.0, 0.5, 4.0, 7.0})
            CHECK_THAT(choice_prob_pair(k, UtilityFamily::crra, {th, 3.0, 0.5}, hump_x, hump_y), WithinAbs(0.5, 1e-15));
    }
}

TEST_CASE("EU-based RUM flattens to one half for strong risk aversion") {
    const double p = choice_prob_pair(ModelKind::eu_rum, UtilityFamily::crra, {20.0, 1.0, 0.0}, hump_x, hump_y);
    CHECK_THAT(p, WithinAbs(0.5, 1e-3));
}

TEST_CASE("tremble mixes toward the opposite option") {
    CHECK(tremble(1.0, 0.05) == 0.95);
    CHECK(tremble(0.0, 0.05) == 0.05);
    CHECK(tremble(0.3, 0.0) == 0.3);
    CHECK(logistic(INFINITY) == 1.0);
    CHECK(logistic(-INFINITY) == 0.0);
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(-800.0) == 0.0);
    CHECK(logistic(-700.0) > 0.0);
}

TEST_CASE("pair probabilities stay complementary with full precision") {
    const PairModel m(ModelKind::pi_rum, UtilityFamily::crra, hump_x, hump_y);
    for (double lam : {1.0, 50.0, 300.0}) {
        const auto [px, py] = m.probabilities({1.0, lam, 0.0});
        CHECK_THAT(px + py, WithinAbs(1.0, 1e-15));
        CHECK(py > 0.0);
        CHECK(px == m.probability({1.0, lam, 0.0}));
    }
}

TEST_CASE("worked menu example under the Pi-based RUM") {
    const Menu menu{X1, X2, X3};
    // gamma = 2: premia are roots of pi^2 + (a+b-4) pi + ab - 2(a+b) = 0.
    const auto v2 = value_index(ModelKind::pi_rum, UtilityFamily::crra, 2.0, menu);
    CHECK(v2[0] == 0.0);
    CHECK_THAT(v2[2], WithinAbs(-0.5 * (-1.0 + std::sqrt(17.0)), 1e-9));
    CHECK_THAT(v2[1], WithinAbs(-0.5 * (-7.0 + std::sqrt(97.0)), 1e-9));
    CHECK_THAT(v2[1], WithinAbs(-1.42, 0.01));
    // The third-ranked option is cheaper to lift than the second-ranked one.
    CHECK(certainty_equivalent(UtilityFamily::crra, 2.0, X3) > certainty_equivalent(UtilityFamily::crra, 2.0, X2));
    CHECK(v2[1] > v2[2]);
    // gamma = 4 against the bisection oracle.
    const auto v4 = value_index(ModelKind::pi_rum, UtilityFamily::crra, 4.0, menu);
    CHECK_THAT(v4[1], WithinAbs(-oracle::bisection_premium(UtilityFamily::crra, 4.0, X2, X1), 1e-9));
    CHECK_THAT(v4[2], WithinAbs(-oracle::bisection_premium(UtilityFamily::crra, 4.0, X3, X1), 1e-9));
    // Vanishing noise sends the mass to the best option.
    const auto p = choice_prob_menu(ModelKind::pi_rum, UtilityFamily::crra, {4.0, 50.0, 0.0}, menu);
    CHECK(p[0] > 1.0 - 1e-12);
}

TEST_CASE("identical lotteries get identical indices") {
    for (auto k : rum_kinds) {
        const auto v = value_index(k, UtilityFamily::crra, 1.5, {X2, X2});
        CHECK(v[0] == v[1]);
        const auto p = choice_prob_menu(k, UtilityFamily::crra, {1.5, 3.0, 0.0}, {X2, X2});
        CHECK(p[0] == 0.5);
    }
}

TEST_CASE("cumulative and plain Pi-based RUMs agree on pairs") {
    oracle::Gen g(21);
    for (int k = 0; k < 300; ++k) {
        const auto X = g.lottery(4, 1.0, 20.0), Y = g.lottery(4, 1.0, 20.0);
        const double th = g.uniform(-5.0, 5.0);
        const auto a = value_index(ModelKind::pi_rum, UtilityFamily::crra, th, {X, Y});
        const auto b = value_index(ModelKind::cum_pi_rum, UtilityFamily::crra, th, {X, Y});
        CHECK(a[0] - a[1] == b[0] - b[1]);
    }
}

TEST_CASE("pairwise Pi-based RUM is a logistic of the premium") {
    oracle::Gen g(22);
    for (int k = 0; k < 1000; ++k) {
        const auto f = g.uniform() < 0.5 ? UtilityFamily::cara : UtilityFamily::crra;
        const auto X = g.lottery(4, 1.0, 20.0), Y = g.lottery(4, 1.0, 20.0);
        const ModelParams p{g.uniform(-5.0, 5.0), g.uniform(0.01, 10.0), 0.0};
        const double want = logistic(-p.lambda * compensating_premium(f, p.theta, X, Y));
        CHECK_THAT(choice_prob_pair(ModelKind::pi_rum, f, p, X, Y), WithinAbs(want, 1e-12));
        // The menu form of the same pair.
        CHECK_THAT(choice_prob_menu(ModelKind::pi_rum, f, p, {X, Y})[0], WithinAbs(want, 1e-12));
    }
}

TEST_CASE("Pi-based RUMs are monotone on Pi-ordered pairs") {
    oracle::Gen g(23);
    for (int k = 0; k < 150; ++k) {
        auto [X, Y] = k % 3 == 0 ? std::make_pair(g.lottery(4, 1.0, 20.0), Lottery::degenerate(g.uniform(1.0, 20.0)))
                                 : ordered_binary_pair(g);
        const double lam = g.uniform(0.1, 20.0), kap = g.uniform(0.0, 0.49);
        for (auto kind : {ModelKind::pi_rum, ModelKind::cum_pi_rum}) {
            const PairModel m(kind, UtilityFamily::crra, X, Y);
            double prev = INFINITY;
            bool ok = true;
            for (double th = -10.0; th <= 10.0; th += 0.05) {
                const double p = m.probability({th, lam, kap});
                ok = ok && p <= prev + 1e-12;
                prev = p;
            }
            CHECK(ok);
        }
    }
}

TEST_CASE("CE-based RUM is monotone against a sure amount") {
    oracle::Gen g(24);
    for (int k = 0; k < 200; ++k) {
        const auto X = g.lottery(5, 1.0, 20.0);
        const auto Y = Lottery::degenerate(g.uniform(1.0, 20.0));
        const PairModel m(ModelKind::ce_rum, UtilityFamily::crra, X, Y);
        const double lam = g.uniform(0.1, 10.0);
        double prev = INFINITY;
        bool ok = true;
        for (double th = -20.0; th <= 20.0; th += 0.1) {
            const double p = m.probability({th, lam, 0.0});
            ok = ok && p <= prev + 1e-12;
            prev = p;
        }
        CHECK(ok);
    }
}

TEST_CASE("CE-based RUM is not monotone on a battery pair") {
    const Lottery X = Lottery::uniform({4500.0, 50.0}), Y = Lottery::uniform({2500.0, 1000.0});
    const PairModel m(ModelKind::ce_rum, UtilityFamily::crra, X, Y);
    // Probability of the safe option falls somewhere above 1.67.
    bool falls = false;
    double prev = 1.0 - m.probability({1.67, 0.01, 0.0});
    for (double th = 1.68; th <= 20.0; th += 0.01) {
        const double py = 1.0 - m.probability({th, 0.01, 0.0});
        falls = falls || py < prev - 1e-12;
        prev = py;
    }
    CHECK(falls);
}

TEST_CASE("contextual utility is not monotone on a Pi-ordered pair") {
    const auto X = Lottery::uniform({2.0, 3.0, 8.0, 10.0});
    const auto Y = Lottery::uniform({4.0, 7.0});
    const PairModel m(ModelKind::con_eu, UtilityFamily::crra, X, Y);
    int ups = 0, downs = 0;
    double prev = m.index_difference(-20.0);
    for (double th = -19.99; th <= 20.0; th += 0.01) {
        const double d = m.index_difference(th);
        if (d > prev + 1e-12) ++ups;
        if (d < prev - 1e-12) ++downs;
        prev = d;
    }
    CHECK(ups > 0);
    CHECK(downs > 0);
}

TEST_CASE("menu probabilities sum to one and favour the best option") {
    oracle::Gen g(25);
    for (int k = 0; k < 300; ++k) {
        const auto f = g.uniform() < 0.5 ? UtilityFamily::cara : UtilityFamily::crra;
        Menu menu;
        const int n = g.integer(2, 5);
        for (int i = 0; i < n; ++i) menu.push_back(g.lottery(4, 1.0, 20.0));
        const ModelParams p{g.uniform(-3.0, 3.0), g.uniform(0.01, 10.0), 0.0};
        for (auto kind : rum_kinds) {
            const auto pr = choice_prob_menu(kind, f, p, menu);
            double total = 0.0;
            for (double v : pr) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                total += v;
            }
            CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        }
        const auto pr = choice_prob_menu(ModelKind::pi_rum, f, p, menu);
        std::size_t best = 0;
        for (std::size_t i = 1; i < menu.size(); ++i)
            if (expected_utility_difference(f, p.theta, menu[i], menu[best]) > 0.0) best = i;
        for (double v : pr) CHECK(pr[best] >= v - 1e-15);
    }
}

TEST_CASE("cumulative RUM jumps where the plain one is continuous") {
    const Menu menu{X1, X2, X3};
    // X2 and X3 swap second place while X1 stays on top.
    auto diff = [](double g) {
        return certainty_equivalent(UtilityFamily::crra, g, X2) - certainty_equivalent(UtilityFamily::crra, g, X3);
    };
    double lo = 0.6, hi = 2.0;
    REQUIRE(diff(lo) > 0.0);
    REQUIRE(diff(hi) < 0.0);
    for (int i = 0; i < 100; ++i) (diff(0.5 * (lo + hi)) > 0 ? lo : hi) = 0.5 * (lo + hi);
    REQUIRE(certainty_equivalent(UtilityFamily::crra, lo, X1) > certainty_equivalent(UtilityFamily::crra, lo, X2));
    const double a = lo - 1e-7, b = hi + 1e-7;
    const auto pa = choice_prob_menu(ModelKind::pi_rum, UtilityFamily::crra, {a, 1.0, 0.0}, menu);
    const auto pb = choice_prob_menu(ModelKind::pi_rum, UtilityFamily::crra, {b, 1.0, 0.0}, menu);
    const auto ca = choice_prob_menu(ModelKind::cum_pi_rum, UtilityFamily::crra, {a, 1.0, 0.0}, menu);
    const auto cb = choice_prob_menu(ModelKind::cum_pi_rum, UtilityFamily::crra, {b, 1.0, 0.0}, menu);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(pa[i] - pb[i]) < 1e-5);
    CHECK(std::abs(ca[0] - cb[0]) > 1e-3);
}

TEST_CASE("random parameter model orientation") {
    const auto f = UtilityFamily::crra;
    const PairModel m(ModelKind::rpm, f, hump_x, hump_y);
    REQUIRE(m.rpm());
    CHECK(m.rpm()->kind == RpmOrientation::Kind::threshold);
    CHECK_THAT(m.rpm()->threshold, WithinAbs(4.91, 0.01));
    CHECK_THAT(m.probability({3.0, 2.0, 0.0}), WithinAbs(logistic(2.0 * (m.rpm()->threshold - 3.0)), 1e-15));
    CHECK(m.probability({m.rpm()->threshold, 2.0, 0.0}) == 0.5);
    // Reversed pair: X preferred above the threshold.
    CHECK_THROWS_AS(PairModel(ModelKind::rpm, f, hump_y, hump_x), OrientationError);
    // Two crossings.
    const Lottery Y7({9.0, 3.99}, {2.0 / 3.0, 1.0 / 3.0});
    CHECK_THROWS_AS(PairModel(ModelKind::rpm, f, Lottery::uniform({14.0, 6.0, 4.0}), Y7), OrientationError);
    // Dominance pairs.
    const PairModel dom(ModelKind::rpm, f, Lottery::degenerate(3850.0), Lottery::degenerate(2000.0));
    CHECK(dom.rpm()->kind == RpmOrientation::Kind::x_dominates);
    CHECK(dom.probability({0.5, 1.0, 0.05}) == 0.95);
    const PairModel rev(ModelKind::rpm, f, Lottery::degenerate(2000.0), Lottery::degenerate(3850.0));
    CHECK(rev.rpm()->kind == RpmOrientation::Kind::y_dominates);
    CHECK_THAT(rev.probability({0.5, 1.0, 0.05}), WithinAbs(0.05, 1e-15));
    CHECK_THROWS_AS(value_index(ModelKind::rpm, f, 1.0, {hump_x, hump_y}), InvalidArgument);
}

TEST_CASE("battery RPM models orient every pair") {
    const auto battery = andersen_battery();
    PairModelOptions opt;
    opt.grid = parameter_grid(UtilityFamily::crra);
    const auto models = battery_models(ModelKind::rpm, UtilityFamily::crra, *battery, opt);
    int thresholds = 0;
    for (std::size_t j = 0; j < models.size(); ++j) {
        if (models[j].rpm()->kind == RpmOrientation::Kind::threshold) {
            ++thresholds;
            CHECK_THAT(models[j].rpm()->threshold, WithinAbs(*(*battery)[j].threshold, 1e-6));
        } else {
            CHECK(models[j].rpm()->kind == RpmOrientation::Kind::x_dominates);
        }
    }
    CHECK(thresholds == 36);
}

TEST_CASE("interpolated premia track exact premia") {
    const auto battery = andersen_battery();
    PairModelOptions opt;
    opt.grid = parameter_grid(UtilityFamily::crra);
    PremiumCurveCache cache(opt.grid);
    opt.interpolate_premium = true;
    const auto fast = battery_models(ModelKind::pi_rum, UtilityFamily::crra, *battery, opt, &cache);
    opt.interpolate_premium = false;
    const auto exact = battery_models(ModelKind::pi_rum, UtilityFamily::crra, *battery, opt);
    for (std::size_t j = 0; j < fast.size(); ++j) {
        const double span = pair_span(fast[j].x(), fast[j].y());
        const auto t = (*battery)[j].threshold;
        for (double th = -3.0037; th < 5.0; th += 0.0173) {
            // The premium has a kink at the threshold; the curve is fitted on
            // either side of it, leaving a slightly larger error nearby.
            const bool near = t && std::abs(th - *t) < 0.02;
            CHECK_THAT(fast[j].index_difference(th), WithinAbs(exact[j].index_difference(th), (near ? 2e-5 : 1e-6) * span));
        }
    }
}

TEST_CASE("menus need two options and valid parameters") {
    CHECK_THROWS_AS(choice_prob_menu(ModelKind::pi_rum, UtilityFamily::crra, {}, {X1}), InvalidArgument);
    CHECK_THROWS_AS(choice_prob_menu(ModelKind::rpm, UtilityFamily::crra, {}, {X1, X2}), InvalidArgument);
    CHECK_THROWS_AS(choice_prob_pair(ModelKind::pi_rum, UtilityFamily::crra, {0.0, -1.0, 0.0}, X1, X2), InvalidArgument);
    CHECK_THROWS_AS(choice_prob_pair(ModelKind::pi_rum, UtilityFamily::crra, {0.0, 1.0, 0.0}, Lottery::degenerate(-1.0), X2),
                    DomainError);
}
