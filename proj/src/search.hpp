#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>

#include "engine.hpp"

namespace csspa {

struct BoundReport {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double truncation_error = 0.0;
    double reward_lower = 0.0;
    double reward_upper = 0.0;
    double failure_probability = 0.0;
    double zeta = 0.0;            // search tolerance
    double delta = 0.0;           // realized envelope gap at the accepted lambda
    double upper_mean = 0.0;      // upper-envelope mean at lambda_hi
    double lower_mean = 0.0;      // lower-envelope mean at lambda_lo
    int probes = 0;
    std::uint64_t probe_seed = 0;
};

struct SearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Residual value left outside a T-round, k-credential truncation of the game.
double truncation_error(double alpha, int rounds, int credentials);

// Bisect the entry fee until the envelope means straddle zero within zeta,
// then compose the reward bracket from the bisection width, the realized
// envelope gap and the truncation budget. params.lambda is ignored.
BoundReport lambda_search(const SimParams& params, double zeta = 5e-4, int max_probes = 20);

// Reward bracket relative to honest play.
std::pair<double, double> marginal_reward(const BoundReport& report);

} // namespace csspa
