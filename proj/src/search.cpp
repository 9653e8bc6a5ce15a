#include "search.hpp"

#include <cmath>
#include <sstream>

namespace csspa {

double truncation_error(double alpha, int rounds, int credentials) {
    if (!(alpha > 0.0 && alpha <= 0.29))
        throw std::domain_error("truncation_error: alpha outside (0, 0.29]");
    if (rounds < 2) throw std::domain_error("truncation_error: rounds must be >= 2");
    if (credentials < 1) throw std::domain_error("truncation_error: credentials must be >= 1");
    const double a = alpha;
    const double head = a * a * (2.0 - 2.0 * a + a * a) / (1.0 - a + a * a);
    const double ratio = a * (2.0 - a) / (1.0 - a);
    return head * std::pow(ratio, rounds - 2) + std::pow(a, credentials);
}

namespace {

// For a single-round game the tail bound collapses to Pr(tau > 1) <= alpha.
double truncation_budget(double alpha, int rounds, int credentials) {
    if (rounds >= 2) return truncation_error(alpha, rounds, credentials);
    return alpha + std::pow(alpha, credentials);
}

} // namespace

BoundReport lambda_search(const SimParams& params, double zeta, int max_probes) {
    if (!(zeta > 0.0)) throw std::domain_error("lambda_search: zeta must be positive");
    if (max_probes < 1) throw std::domain_error("lambda_search: max_probes must be >= 1");
    SimParams base = params.resolved();

    BoundReport rep;
    rep.alpha = base.alpha;
    rep.beta = base.beta;
    rep.zeta = zeta;
    // One seed shared by every probe: common random numbers keep the
    // estimated mean monotone in lambda up to discretization effects.
    rep.probe_seed = RngStream::mix(base.seed ^ 0x6c616d626461ULL);

    double last_fp = 0.0;
    auto probe = [&](double lam) {
        SimParams q = base;
        q.lambda = lam;
        q.seed = rep.probe_seed;
        if (!q.checkpoint_dir.empty()) {
            std::ostringstream tag;
            tag << base.checkpoint_tag << "_lam" << std::hexfloat << lam;
            q.checkpoint_tag = tag.str();
        }
        const SimResult up = truncated_simulate(q, Envelope::upper);
        const SimResult lo = truncated_simulate(q, Envelope::lower);
        last_fp = up.failure_probability + lo.failure_probability;
        return std::make_pair(up.mean, lo.mean);
    };

    double lo = 1e-9, hi = 1.0 - 1e-9;
    bool accepted = false;
    double u_acc = 0.0, l_acc = 0.0;
    for (int it = 0; it < max_probes && !accepted; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto [u, l] = probe(mid);
        ++rep.probes;
        if ((u <= zeta && l >= -zeta) || (l <= 0.0 && 0.0 <= u)) {
            lo = hi = mid;
            u_acc = u;
            l_acc = l;
            accepted = true;
        } else if (l > 0.0) {
            lo = mid;  // fee still below the win rate
        } else {
            hi = mid;  // u < 0: fee above the win rate
        }
    }
    if (!accepted) {
        // Verify the surviving bracket endpoints directly.
        auto [u_hi, l_hi] = probe(hi);
        auto [u_lo, l_lo] = probe(lo);
        rep.probes += 2;
        if (!(u_hi <= zeta) || !(l_lo >= -zeta)) {
            std::ostringstream msg;
            msg << "lambda_search: no sign bracket after " << rep.probes
                << " probes; at lambda_lo=" << lo << " lower mean " << l_lo
                << ", at lambda_hi=" << hi << " upper mean " << u_hi;
            throw SearchError(msg.str());
        }
        u_acc = u_hi;
        l_acc = l_lo;
    }

    rep.lambda_lo = lo;
    rep.lambda_hi = hi;
    rep.upper_mean = u_acc;
    rep.lower_mean = l_acc;
    rep.delta = std::max(0.0, u_acc - l_acc);
    rep.truncation_error = truncation_budget(base.alpha, base.rounds, base.credentials);
    rep.reward_lower = lo - (zeta + rep.delta);
    rep.reward_upper = hi + (zeta + rep.delta) + rep.truncation_error;
    rep.failure_probability = last_fp;
    return rep;
}

std::pair<double, double> marginal_reward(const BoundReport& report) {
    return {report.reward_lower - report.alpha, report.reward_upper - report.alpha};
}

} // namespace csspa
