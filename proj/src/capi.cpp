#include "csspa.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "engine.hpp"
#include "omniscient.hpp"
#include "scoring.hpp"
#include "search.hpp"

struct csspa_dist {
    csspa::RewardDistribution d;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return CSSPA_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CSSPA_EINVAL, e.what());
    } catch (const std::domain_error& e) {
        return fail(CSSPA_EINVAL, e.what());
    } catch (const csspa::SearchError& e) {
        return fail(CSSPA_ENUMERIC, e.what());
    } catch (const std::bad_alloc& e) {
        return fail(CSSPA_ENUMERIC, e.what());
    } catch (const std::exception& e) {
        // Runtime errors from the engine are I/O (checkpoints) or numeric.
        const std::string what = e.what();
        const bool io = what.find("checkpoint") != std::string::npos;
        return fail(io ? CSSPA_EIO : CSSPA_ENUMERIC, e.what());
    }
}

csspa::SimParams to_params(const csspa_params* p) {
    csspa::SimParams q;
    q.alpha = p->alpha;
    q.beta = p->beta;
    q.lambda = p->lambda;
    q.rounds = p->rounds;
    q.credentials = p->credentials;
    q.samples = static_cast<std::size_t>(p->samples);
    q.gamma = p->gamma;
    q.omega = p->omega;
    q.epsilon = p->epsilon;
    q.eta = p->eta;
    q.seed = p->seed;
    q.workers = p->workers;
    if (p->checkpoint_dir) q.checkpoint_dir = p->checkpoint_dir;
    if (p->checkpoint_tag) q.checkpoint_tag = p->checkpoint_tag;
    return q;
}

csspa::Envelope to_envelope(int envelope) {
    switch (envelope) {
        case CSSPA_ENV_RAW: return csspa::Envelope::raw;
        case CSSPA_ENV_LOWER: return csspa::Envelope::lower;
        case CSSPA_ENV_UPPER: return csspa::Envelope::upper;
        default: throw std::invalid_argument("envelope must be 0 (raw), 1 (lower) or 2 (upper)");
    }
}

} // namespace

extern "C" {

void csspa_params_init(csspa_params* p) {
    std::memset(p, 0, sizeof(*p));
    p->epsilon = 1e-4;
    p->eta = 1e-3;
    p->workers = 1;
}

double csspa_kappa(void) { return csspa::kappa(); }

int csspa_extinction_series(double alpha, int t_max, int greedy,
                            double* p, double* partial_sum, double* tail_bound) {
    if (!p) return fail(CSSPA_EINVAL, "null output array");
    return guarded([&] {
        const csspa::OmniscientSeries s = greedy
            ? csspa::greedy_extinction_recursion(alpha, t_max)
            : csspa::extinction_recursion(alpha, t_max);
        for (std::size_t t = 0; t < s.p.size(); ++t) p[t] = s.p[t];
        if (partial_sum) *partial_sum = s.partial_sum;
        if (tail_bound) *tail_bound = s.tail_bound;
    });
}

int csspa_omniscient_bound(double alpha, double delta, int t_delta,
                           csspa_omni_bound* out) {
    if (!out) return fail(CSSPA_EINVAL, "null output");
    return guarded([&] {
        const csspa::OmniscientBound b = csspa::omniscient_reward_bound(
            alpha, delta > 0.0 ? delta : 1e-7, t_delta > 0 ? t_delta : 3000);
        out->alpha = b.alpha;
        out->expected_tau_lower = b.expected_tau_lower;
        out->expected_tau_upper = b.expected_tau_upper;
        out->reward_lower = b.reward_lower;
        out->reward_upper = b.reward_upper;
        out->additive_gap = b.additive_gap;
    });
}

int csspa_closed_form_bounds(double alpha, double* tau_ub, double* reward_ub,
                             double* fhwy_reward_ub) {
    return guarded([&] {
        const csspa::ClosedFormBounds b = csspa::closed_form_bounds(alpha);
        if (tau_ub) *tau_ub = b.tau_ub;
        if (reward_ub) *reward_ub = b.reward_ub;
        if (fhwy_reward_ub) *fhwy_reward_ub = b.fhwy_reward_ub;
    });
}

int csspa_truncation_error(double alpha, int rounds, int credentials, double* out) {
    if (!out) return fail(CSSPA_EINVAL, "null output");
    return guarded([&] { *out = csspa::truncation_error(alpha, rounds, credentials); });
}

int csspa_simulate(const csspa_params* p, int envelope, double* mean,
                   double* failure_probability, csspa_dist** dist_out) {
    if (!p) return fail(CSSPA_EINVAL, "null params");
    return guarded([&] {
        csspa::SimResult r = csspa::truncated_simulate(to_params(p), to_envelope(envelope));
        if (mean) *mean = r.mean;
        if (failure_probability) *failure_probability = r.failure_probability;
        if (dist_out) *dist_out = new csspa_dist{std::move(r.dist)};
    });
}

long long csspa_dist_size(const csspa_dist* d) {
    return d ? static_cast<long long>(d->d.samples.size()) : 0;
}

int csspa_dist_round(const csspa_dist* d) { return d ? d->d.round : 0; }

double csspa_dist_mean(const csspa_dist* d) { return d ? d->d.mean() : 0.0; }

double csspa_dist_support_lo(const csspa_dist* d) { return d ? d->d.support_lo() : 0.0; }

double csspa_dist_support_hi(const csspa_dist* d) { return d ? d->d.support_hi() : 0.0; }

int csspa_dist_copy(const csspa_dist* d, double* buf, long long cap) {
    if (!d || !buf) return fail(CSSPA_EINVAL, "null distribution or buffer");
    if (cap < static_cast<long long>(d->d.samples.size()))
        return fail(CSSPA_EINVAL, "buffer too small for distribution");
    std::memcpy(buf, d->d.samples.data(), d->d.samples.size() * sizeof(double));
    return CSSPA_OK;
}

void csspa_dist_free(csspa_dist* d) { delete d; }

int csspa_lambda_search(const csspa_params* p, double zeta, int max_probes,
                        csspa_bound_report* out) {
    if (!p || !out) return fail(CSSPA_EINVAL, "null params or output");
    return guarded([&] {
        const csspa::BoundReport r = csspa::lambda_search(
            to_params(p), zeta > 0.0 ? zeta : 5e-4, max_probes > 0 ? max_probes : 20);
        out->alpha = r.alpha;
        out->beta = r.beta;
        out->lambda_lo = r.lambda_lo;
        out->lambda_hi = r.lambda_hi;
        out->truncation_error = r.truncation_error;
        out->reward_lower = r.reward_lower;
        out->reward_upper = r.reward_upper;
        out->failure_probability = r.failure_probability;
        out->zeta = r.zeta;
        out->delta = r.delta;
        out->upper_mean = r.upper_mean;
        out->lower_mean = r.lower_mean;
        out->probes = r.probes;
        out->probe_seed = r.probe_seed;
    });
}

int csspa_marginal_reward(const csspa_bound_report* report, double* lower, double* upper) {
    if (!report) return fail(CSSPA_EINVAL, "null report");
    if (lower) *lower = report->reward_lower - report->alpha;
    if (upper) *upper = report->reward_upper - report->alpha;
    return CSSPA_OK;
}

int csspa_scoring_selftest(uint64_t seed, csspa_check* out, int cap, int* count) {
    return guarded([&] {
        const auto checks = csspa::scoring_selftest(seed);
        if (count) *count = static_cast<int>(checks.size());
        if (!out) return;
        const int n = std::min<int>(cap, static_cast<int>(checks.size()));
        for (int i = 0; i < n; ++i) {
            const auto& c = checks[static_cast<std::size_t>(i)];
            std::snprintf(out[i].name, sizeof(out[i].name), "%s", c.name.c_str());
            out[i].statistic = c.statistic;
            out[i].threshold = c.threshold;
            out[i].pass = c.pass ? 1 : 0;
        }
    });
}

const char* csspa_strerror(int code) {
    switch (code) {
        case CSSPA_OK: return "success";
        case CSSPA_EINVAL: return "invalid parameter";
        case CSSPA_ENUMERIC: return "numerical failure";
        case CSSPA_EIO: return "checkpoint I/O failure";
        default: return "unknown error code";
    }
}

const char* csspa_last_error(void) { return g_last_error.c_str(); }

} // extern "C"
