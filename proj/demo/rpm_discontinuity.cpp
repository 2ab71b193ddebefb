// Discontinuity at infinity of the random parameter model.
//
// X pays 14, 6 or 4 with equal probability; Y pays 9 with probability 2/3
// and 4 - eps otherwise. For eps > 0 the CRRA preference switches twice
// (X, then Y, then X again), so a random parameter model sends P(X) to 1 as
// gamma grows. At eps = 0 there is a single switch and P(X) goes to 0.
// Premium-based models move smoothly: their limit is logistic(lambda * eps).
//
// The library refuses RPM probabilities for pairs with two switches, so the
// eps > 0 column is assembled here from the crossings directly.

#include <cstdio>
#include <vector>

#include "pirum/choice_models.hpp"
#include "pirum/ordering.hpp"

int main() {
    using namespace pirum;
    const auto f = UtilityFamily::crra;
    const double lambda = 2.0;
    const Lottery X = Lottery::uniform({14.0, 6.0, 4.0});

    std::printf("lambda = %.1f\n", lambda);
    std::printf("%8s %-22s %8s %10s %10s\n", "eps", "crossings", "gamma", "RPM P(X)", "PI P(X)");
    for (double eps : {0.1, 0.01, 0.001, 0.0}) {
        const Lottery Y({9.0, 4.0 - eps}, {2.0 / 3.0, 1.0 / 3.0});
        const auto cross = indifference_thresholds(f, X, Y);
        char label[64];
        if (cross.size() == 1) std::snprintf(label, sizeof label, "%.3f", cross[0]);
        else if (cross.size() == 2) std::snprintf(label, sizeof label, "%.3f, %.3f", cross[0], cross[1]);
        else std::snprintf(label, sizeof label, "%zu crossings", cross.size());

        const PairModel pi(ModelKind::pi_rum, f, X, Y);
        for (double gamma : {5.0, 20.0, 100.0, 1000.0}) {
            // The perturbed parameter is logistic around gamma with scale
            // 1/lambda; X is chosen where the perturbed agent prefers it.
            double rpm = 0.0;
            if (cross.size() == 1) {
                rpm = logistic(lambda * (cross[0] - gamma));
            } else if (cross.size() == 2) {
                rpm = logistic(lambda * (cross[0] - gamma)) + logistic(lambda * (gamma - cross[1]));
            }
            std::printf("%8.3f %-22s %8.0f %10.6f %10.6f\n", eps, label, gamma, rpm,
                        pi.probability({gamma, lambda, 0.0}));
        }
    }
    std::printf("premium limit at infinite gamma: -eps, so PI P(X) -> logistic(lambda * eps)\n");
    return 0;
}
