#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace csspa {

enum class Envelope { raw, lower, upper };

const char* to_string(Envelope mode);
Envelope envelope_from_string(const std::string& s);

enum class RoundDir { down, nearest, up };

struct SimParams {
    double alpha = 0.0;
    double beta = 1.0;
    double lambda = 0.0;
    int rounds = 0;
    int credentials = 0;
    std::size_t samples = 0;
    double gamma = 0.0;   // <= 0 selects exp(-2/n), the loosest value still deleting one sample
    double omega = 0.0;   // <= 0 selects 1/n, the smallest valid duplication fraction
    double epsilon = 1e-4;
    double eta = 1e-3;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string checkpoint_dir;  // empty disables checkpoints
    std::string checkpoint_tag = "run";

    SimParams resolved() const;
    void validate() const;  // throws std::invalid_argument
    double deletion_fraction() const;   // sqrt(ln(1/gamma) / (2n))
    std::size_t deletion_count() const; // ceil(n * deletion_fraction)
};

struct RewardDistribution {
    std::vector<double> samples;  // ascending
    int round = 0;
    double lambda = 0.0;
    Envelope mode = Envelope::raw;

    double support_lo() const { return -round * lambda; }
    double support_hi() const { return round * (1.0 - lambda); }
    double mean() const;
    static RewardDistribution point_mass(double value, std::size_t n, double lambda,
                                         Envelope mode = Envelope::raw);
};

struct CredentialDraw {
    std::vector<double> scores;   // k + 1 entries, ascending, scores[k] = +inf
    std::vector<double> rewards;  // k entries drawn from the previous round
};

struct SaturationStats {
    std::uint64_t support_clamps = 0;  // samples nudged back into the round's support
    void merge(const SaturationStats& o) { support_clamps += o.support_clamps; }
};

// Per-round lookup tables over an epsilon grid of reward values: binned pdf,
// CDF, tail expectation and E_max(theta) = E[max(theta, r)], plus, for
// 0 < beta < 1, prefix Riemann sums of zeta^((1-beta)/beta) *
// E_max(g / zeta^((1-beta)/beta)) over an eta grid of zeta in (0, 1].
// Rounding directions follow the envelope being built so every lookup errs
// to the conservative side.
class PrecomputeTables {
public:
    PrecomputeTables(const RewardDistribution& prev, const SimParams& params,
                     int round_t, Envelope mode);

    Envelope mode() const { return mode_; }
    bool has_g_table() const { return nz_ > 0; }

    double emax(double theta, RoundDir dir) const;
    double pdf_mass() const;
    double prev_mean() const { return mean_; }

    // Bounds on the integral of zeta^p * E_max(g / zeta^p) over [zlo, zhi].
    double segment_lower(double zlo, double zhi, double g) const;
    double segment_upper(double zlo, double zhi, double g) const;

    double grid_lo() const { return static_cast<double>(base_) * eps_; }
    double grid_hi() const { return static_cast<double>(base_ + static_cast<long long>(nth_) - 1) * eps_; }

private:
    Envelope mode_;
    double eps_ = 0.0, eta_ = 0.0, pexp_ = 0.0;
    long long base_ = 0;   // theta_i = (base_ + i) * eps_
    std::size_t nth_ = 0;
    std::size_t total_count_ = 0, binned_count_ = 0;
    double mean_ = 0.0, max_theta_ = 0.0;
    double epos_ = 0.0, eneg_ = 0.0;  // E[max(r,0)] and E[max(-r,0)] of the binned pdf
    std::vector<double> pdf_, emax_;
    int nz_ = 0;
    std::vector<double> zpow_;
    std::vector<double> pref_lo_, pref_up_;  // nth_ rows of (nz_ + 1) prefix sums

    std::size_t theta_index(double theta, RoundDir dir) const;
    double integrand(double g, int j, RoundDir dir) const;
    double cell_lower(double g, int j) const;
    double cell_upper(double g, int j) const;
    double cum_lower(double z, double g) const;
    double cum_upper(double z, double g) const;
};

CredentialDraw draw_adversary(const RewardDistribution& prev, const SimParams& params,
                              RngStream& rng);

// One sample of the round-t linearized reward given a credential draw.
double sample_reward(const PrecomputeTables& tables, const CredentialDraw& draw,
                     const SimParams& params, int round_t);

// Push the empirical distribution stochastically below / above the sampled
// one. Both take a raw sorted distribution and preserve the sample count.
RewardDistribution deflate(RewardDistribution dist, double gamma, double lambda);
RewardDistribution inflate(RewardDistribution dist, double gamma, double omega,
                           int round_t, double lambda);

RewardDistribution add_layer(const RewardDistribution& prev, const SimParams& params,
                             int round_t, Envelope mode, SaturationStats* sat = nullptr);

struct SimResult {
    RewardDistribution dist;
    double mean = 0.0;
    double failure_probability = 0.0;
    SaturationStats sat;
};

SimResult truncated_simulate(const SimParams& params, Envelope mode);

void write_checkpoint(const RewardDistribution& dist, const std::string& path);
RewardDistribution read_checkpoint(const std::string& path);
std::string checkpoint_path(const SimParams& params, Envelope mode, int round_t);

} // namespace csspa
