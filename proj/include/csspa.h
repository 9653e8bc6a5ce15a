/* C interface to the self-selection reward-bound library.
 *
 * All functions return CSSPA_OK on success or a CSSPA_E* code; a thread-local
 * message describing the last failure is available via csspa_last_error().
 */
#ifndef CSSPA_H
#define CSSPA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CSSPA_OK 0
#define CSSPA_EINVAL 1   /* parameter outside its domain */
#define CSSPA_ENUMERIC 2 /* search or table construction failed numerically */
#define CSSPA_EIO 3      /* checkpoint file unreadable or unwritable */

#define CSSPA_ENV_RAW 0
#define CSSPA_ENV_LOWER 1
#define CSSPA_ENV_UPPER 2

typedef struct csspa_dist csspa_dist; /* opaque empirical reward distribution */

typedef struct {
    double alpha;      /* adversarial stake, (0, 0.29] */
    double beta;       /* visible fraction of honest stake, [0, 1] */
    double lambda;     /* per-round entry fee, [0, 1) */
    int rounds;        /* truncation depth T */
    int credentials;   /* scores kept per round, k */
    uint64_t samples;  /* Monte Carlo samples per round, n */
    double gamma;      /* envelope failure probability per round; <= 0 picks exp(-2/n) */
    double omega;      /* duplication fraction for the upper envelope; <= 0 picks 1/n */
    double epsilon;    /* reward grid step; 1/epsilon must be integral */
    double eta;        /* integration grid step; 1/eta must be integral */
    uint64_t seed;
    int workers;       /* sampling threads per round */
    const char* checkpoint_dir; /* NULL disables per-round checkpoints */
    const char* checkpoint_tag; /* NULL means "run" */
} csspa_params;

typedef struct {
    double alpha;
    double expected_tau_lower, expected_tau_upper;
    double reward_lower, reward_upper;
    double additive_gap;
} csspa_omni_bound;

typedef struct {
    double alpha, beta;
    double lambda_lo, lambda_hi;
    double truncation_error;
    double reward_lower, reward_upper;
    double failure_probability;
    double zeta;       /* search tolerance used */
    double delta;      /* realized envelope gap */
    double upper_mean; /* upper-envelope mean at lambda_hi */
    double lower_mean; /* lower-envelope mean at lambda_lo */
    int probes;
    uint64_t probe_seed;
} csspa_bound_report;

typedef struct {
    char name[64];
    double statistic;
    double threshold;
    int pass;
} csspa_check;

/* Fill defaults: everything zeroed except epsilon=1e-4, eta=1e-3, workers=1. */
void csspa_params_init(csspa_params* p);

/* Stake threshold above which the omniscient adversary's expected stopping
 * time diverges: (3 - sqrt(5)) / 2. */
double csspa_kappa(void);

/* Survival probabilities p[t] = Pr(tau > t) for t = 0..t_max (p must hold
 * t_max + 1 doubles). greedy != 0 selects the greedy branching variant.
 * partial_sum and tail_bound may be NULL. */
int csspa_extinction_series(double alpha, int t_max, int greedy,
                            double* p, double* partial_sum, double* tail_bound);

/* Two-sided omniscient bound; delta <= 0 and t_delta <= 0 select the
 * defaults 1e-7 and 3000. */
int csspa_omniscient_bound(double alpha, double delta, int t_delta,
                           csspa_omni_bound* out);

/* Closed-form upper bounds; any output pointer may be NULL. */
int csspa_closed_form_bounds(double alpha, double* tau_ub, double* reward_ub,
                             double* fhwy_reward_ub);

int csspa_truncation_error(double alpha, int rounds, int credentials, double* out);

/* Run the T-round simulation in the requested envelope mode. mean and
 * failure_probability may be NULL; if dist_out is non-NULL it receives the
 * final distribution, to be released with csspa_dist_free. */
int csspa_simulate(const csspa_params* p, int envelope, double* mean,
                   double* failure_probability, csspa_dist** dist_out);

long long csspa_dist_size(const csspa_dist* d);
int csspa_dist_round(const csspa_dist* d);
double csspa_dist_mean(const csspa_dist* d);
double csspa_dist_support_lo(const csspa_dist* d);
double csspa_dist_support_hi(const csspa_dist* d);
/* Copy the ascending samples into buf (capacity cap); fails if cap is short. */
int csspa_dist_copy(const csspa_dist* d, double* buf, long long cap);
void csspa_dist_free(csspa_dist* d);

/* Bisection over the entry fee; zeta <= 0 selects 5e-4, max_probes <= 0
 * selects 20. p->lambda is ignored. */
int csspa_lambda_search(const csspa_params* p, double zeta, int max_probes,
                        csspa_bound_report* out);

/* Reward bracket minus the honest win rate alpha. */
int csspa_marginal_reward(const csspa_bound_report* report,
                          double* lower, double* upper);

/* Distributional self-tests of the scoring layer; writes up to cap entries
 * and stores the total count in *count. */
int csspa_scoring_selftest(uint64_t seed, csspa_check* out, int cap, int* count);

const char* csspa_strerror(int code);
const char* csspa_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* CSSPA_H */
