#include "omniscient.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace csspa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double kappa() {
    return (3.0 - std::sqrt(5.0)) / 2.0;
}

OmniscientSeries extinction_recursion(double alpha, int t_max) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("extinction_recursion: alpha outside (0,1)");
    if (t_max < 2) throw std::domain_error("extinction_recursion: t_max must be >= 2");

    OmniscientSeries s;
    s.alpha = alpha;
    s.p.resize(static_cast<std::size_t>(t_max) + 1);
    s.p[0] = 1.0;
    long double acc = 1.0L;
    long double p = 1.0L;
    const long double a = alpha;
    for (int t = 1; t <= t_max; ++t) {
        p = (a * (2.0L - a) * p - a * (1.0L - a) * p * p) / ((1.0L - a) + a * p);
        s.p[static_cast<std::size_t>(t)] = static_cast<double>(p);
        acc += p;
    }
    s.partial_sum = static_cast<double>(acc);

    const double ratio = alpha * (2.0 - alpha) / (1.0 - alpha);
    s.unbounded = alpha > kappa();
    if (ratio < 1.0) {
        const double head = alpha * alpha * (2.0 - 2.0 * alpha + alpha * alpha)
                            / (1.0 - alpha + alpha * alpha);
        s.tail_bound = head * std::pow(ratio, t_max - 1) / (1.0 - ratio);
    } else {
        s.tail_bound = kInf;
    }
    return s;
}

OmniscientSeries greedy_extinction_recursion(double alpha, int t_max) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("greedy_extinction_recursion: alpha outside (0,1)");
    if (t_max < 1) throw std::domain_error("greedy_extinction_recursion: t_max must be >= 1");

    OmniscientSeries s;
    s.alpha = alpha;
    s.p.resize(static_cast<std::size_t>(t_max) + 1);
    s.p[0] = 1.0;
    long double acc = 1.0L;
    long double p = 1.0L;
    const long double a = alpha;
    for (int t = 1; t <= t_max; ++t) {
        p = a * p / ((1.0L - a) + a * p);
        s.p[static_cast<std::size_t>(t)] = static_cast<double>(p);
        acc += p;
    }
    s.partial_sum = static_cast<double>(acc);
    s.unbounded = alpha > 0.5;
    s.tail_bound = s.unbounded ? kInf : 0.0;
    return s;
}

OmniscientBound omniscient_reward_bound(double alpha, double delta, int t_delta) {
    if (!(alpha > 0.0 && alpha <= 0.38)) throw std::domain_error("omniscient_reward_bound: alpha outside (0, 0.38]");
    if (!(delta > 0.0)) throw std::domain_error("omniscient_reward_bound: delta must be positive");
    if (t_delta < 2) throw std::domain_error("omniscient_reward_bound: t_delta must be >= 2");

    OmniscientSeries s = extinction_recursion(alpha, t_delta);
    OmniscientBound b;
    b.alpha = alpha;
    b.additive_gap = delta;
    b.expected_tau_lower = s.partial_sum;
    b.expected_tau_upper = s.partial_sum + delta;
    b.reward_lower = 1.0 - 1.0 / b.expected_tau_lower;
    b.reward_upper = 1.0 - 1.0 / b.expected_tau_upper;
    return b;
}

ClosedFormBounds closed_form_bounds(double alpha) {
    if (!(alpha > 0.0 && alpha < kappa())) throw std::domain_error("closed_form_bounds: alpha outside (0, kappa)");
    const double a = alpha, a2 = a * a, a3 = a2 * a;
    ClosedFormBounds b;
    b.tau_ub = (1.0 - 3.0 * a + 3.0 * a2 - 3.0 * a3)
               / ((1.0 - 3.0 * a + a2) * (1.0 - a + a2));
    b.reward_ub = a * (1.0 - 2.0 * a + a2 - a3) / (1.0 - 3.0 * a + 3.0 * a2 - 3.0 * a3);
    b.fhwy_reward_ub = a * (2.0 - a) / (1.0 - a);
    return b;
}

} // namespace csspa
