#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace csspa {

// Logarithmic score of a uniform credential x held by a stake-alpha wallet.
// Infinite for zero stake, zero for x == 0 with positive stake.
double log_score(double x, double alpha);

// Inverse CDF of Exp(rate) evaluated at survival value u in (0, 1].
double exponential_icdf(double u, double rate);

double sample_exponential(double rate, RngStream& rng);

// Ascending scores of the k best credentials of a stake-alpha wallet:
// partial sums of i.i.d. Exp(alpha) increments.
std::vector<double> sample_order_statistics(double alpha, int k, RngStream& rng);

// Pr(score >= s) for a stake-alpha wallet.
double survival(double s, double alpha);

// Minimum score over a coalition of wallets with the given stakes.
double min_split_sample(std::span<const double> stakes, RngStream& rng);

// One-sample Kolmogorov-Smirnov statistic against a CDF. Sorts a copy.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

double two_sample_ks(std::vector<double> a, std::vector<double> b);

// Asymptotic critical values; level is the significance (e.g. 0.01).
double ks_critical(double level, std::size_t n);
double two_sample_ks_critical(double level, std::size_t n, std::size_t m);

struct ScoringCheck {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Statistical verification of the scoring-layer distributional claims;
// deterministic given the seed.
std::vector<ScoringCheck> scoring_selftest(std::uint64_t seed);

} // namespace csspa
