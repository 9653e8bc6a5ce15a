#pragma once

#include <vector>

namespace csspa {

struct OmniscientSeries {
    double alpha = 0.0;
    std::vector<double> p;     // p[t] = Pr(tau > t), t = 0..t_max
    double partial_sum = 0.0;  // sum of p[0..t_max]
    double tail_bound = 0.0;   // bound on the omitted tail sum; +inf when unbounded
    bool unbounded = false;    // expected stopping time diverges
};

struct OmniscientBound {
    double alpha = 0.0;
    double expected_tau_lower = 0.0;
    double expected_tau_upper = 0.0;
    double reward_lower = 0.0;
    double reward_upper = 0.0;
    double additive_gap = 0.0;
};

struct ClosedFormBounds {
    double tau_ub = 0.0;
    double reward_ub = 0.0;
    double fhwy_reward_ub = 0.0;
};

// Stake threshold above which the omniscient adversary stalls forever:
// the smaller root of 1 - 3x + x^2.
double kappa();

// Survival probabilities of the forced stopping time under the omniscient
// adversary, plus a geometric bound on the truncated tail.
OmniscientSeries extinction_recursion(double alpha, int t_max);

// Same series for the greedy variant that only branches on immediate wins.
OmniscientSeries greedy_extinction_recursion(double alpha, int t_max);

// Two-sided bound on the expected stopping time and the induced win rate,
// tight up to the additive gap delta.
OmniscientBound omniscient_reward_bound(double alpha, double delta = 1e-7, int t_delta = 3000);

ClosedFormBounds closed_form_bounds(double alpha);

} // namespace csspa
