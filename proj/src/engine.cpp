#include "engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "scoring.hpp"

namespace csspa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 16384;
}

const char* to_string(Envelope mode) {
    switch (mode) {
        case Envelope::raw: return "raw";
        case Envelope::lower: return "lower";
        case Envelope::upper: return "upper";
    }
    return "raw";
}

Envelope envelope_from_string(const std::string& s) {
    if (s == "raw") return Envelope::raw;
    if (s == "lower") return Envelope::lower;
    if (s == "upper") return Envelope::upper;
    throw std::invalid_argument("unknown envelope mode: " + s);
}

SimParams SimParams::resolved() const {
    SimParams p = *this;
    const double n = static_cast<double>(p.samples);
    if (p.gamma <= 0.0) p.gamma = std::exp(-2.0 / n);
    if (p.omega <= 0.0) p.omega = 1.0 / n;
    return p;
}

double SimParams::deletion_fraction() const {
    return std::sqrt(std::log(1.0 / gamma) / (2.0 * static_cast<double>(samples)));
}

std::size_t SimParams::deletion_count() const {
    return static_cast<std::size_t>(
        std::ceil(static_cast<double>(samples) * deletion_fraction() - 1e-9));
}

void SimParams::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("SimParams: " + msg); };
    if (!(alpha > 0.0 && alpha <= 0.29)) fail("alpha must lie in (0, 0.29]");
    if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
    if (!(lambda >= 0.0 && lambda < 1.0)) fail("lambda must lie in [0, 1)");
    if (rounds < 0) fail("rounds must be non-negative");
    if (credentials < 1) fail("credentials must be >= 1");
    if (samples < 2) fail("samples must be >= 2");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
    if (!(omega > 0.0 && omega < 1.0)) fail("omega must lie in (0, 1)");
    const double n = static_cast<double>(samples);
    if (n * deletion_fraction() < 1.0 - 1e-9) fail("n*sqrt(ln(1/gamma)/(2n)) must be >= 1");
    if (omega * n < 1.0 - 1e-9) fail("omega*n must be >= 1");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (std::abs(1.0 / epsilon - std::round(1.0 / epsilon)) > 1e-6)
        fail("1/epsilon must be an integer so the grid tiles every round's support");
    if (!(eta > 0.0 && eta < 1.0)) fail("eta must lie in (0, 1)");
    if (std::abs(1.0 / eta - std::round(1.0 / eta)) > 1e-6)
        fail("1/eta must be an integer");
    if (workers < 1) fail("workers must be >= 1");
}

double RewardDistribution::mean() const {
    long double acc = 0.0L;
    for (double s : samples) acc += s;
    return samples.empty() ? 0.0 : static_cast<double>(acc / samples.size());
}

RewardDistribution RewardDistribution::point_mass(double value, std::size_t n, double lambda,
                                                  Envelope mode) {
    RewardDistribution d;
    d.samples.assign(n, value);
    d.round = 0;
    d.lambda = lambda;
    d.mode = mode;
    return d;
}

PrecomputeTables::PrecomputeTables(const RewardDistribution& prev, const SimParams& params,
                                   int round_t, Envelope mode)
    : mode_(mode), eps_(params.epsilon), eta_(params.eta) {
    if (prev.samples.empty()) throw std::invalid_argument("precompute: empty distribution");
    if (prev.round != round_t - 1) throw std::invalid_argument("precompute: round mismatch");

    const RoundDir bin_dir = mode == Envelope::lower ? RoundDir::down
                           : mode == Envelope::upper ? RoundDir::up
                                                     : RoundDir::nearest;

    const double smin = prev.samples.front();
    const double smax = prev.samples.back();
    // The grid must cover both the sample range and every reachable g value:
    // g lies in (min(0, 1 + smin), 1 + smax]. One spare cell on each side.
    const double lo = std::min(smin, std::min(0.0, 1.0 + smin));
    const double hi = 1.0 + smax;
    base_ = static_cast<long long>(std::floor(lo / eps_ + 1e-9)) - 1;
    const long long top = static_cast<long long>(std::ceil(hi / eps_ - 1e-9)) + 1;
    nth_ = static_cast<std::size_t>(top - base_ + 1);

    pdf_.assign(nth_, 0.0);
    total_count_ = prev.samples.size();
    std::vector<std::size_t> counts(nth_, 0);
    for (double s : prev.samples) {
        double x = s / eps_ - static_cast<double>(base_);
        long long gi;
        switch (bin_dir) {
            case RoundDir::down: gi = static_cast<long long>(std::floor(x + 1e-9)); break;
            case RoundDir::up: gi = static_cast<long long>(std::ceil(x - 1e-9)); break;
            default: gi = std::llround(x); break;
        }
        gi = std::clamp<long long>(gi, 0, static_cast<long long>(nth_) - 1);
        ++counts[static_cast<std::size_t>(gi)];
    }
    binned_count_ = 0;
    const double inv_n = 1.0 / static_cast<double>(total_count_);
    long double mean_acc = 0.0L;
    std::size_t max_idx = 0;
    for (std::size_t i = 0; i < nth_; ++i) {
        binned_count_ += counts[i];
        pdf_[i] = static_cast<double>(counts[i]) * inv_n;
        if (counts[i] > 0) max_idx = i;
        mean_acc += static_cast<long double>(counts[i])
                    * (static_cast<long double>(base_) + i) * eps_;
    }
    mean_ = static_cast<double>(mean_acc * inv_n);
    max_theta_ = (static_cast<double>(base_) + static_cast<double>(max_idx)) * eps_;
    long double pos = 0.0L, neg = 0.0L;
    for (std::size_t i = 0; i < nth_; ++i) {
        const long double v = (static_cast<long double>(base_) + i) * eps_
                              * static_cast<long double>(pdf_[i]);
        if (v > 0) pos += v; else neg -= v;
    }
    epos_ = static_cast<double>(pos);
    eneg_ = static_cast<double>(neg);

    // E_max(theta) = theta * Pr(r <= theta) + E[r * 1(r > theta)] on the grid.
    emax_.assign(nth_, 0.0);
    long double cdf = 0.0L;
    std::vector<long double> tail(nth_ + 1, 0.0L);
    for (std::size_t i = nth_; i-- > 0;) {
        tail[i] = tail[i + 1]
                  + static_cast<long double>(pdf_[i])
                        * (static_cast<long double>(base_) + i) * eps_;
    }
    for (std::size_t i = 0; i < nth_; ++i) {
        cdf += pdf_[i];
        const double theta = (static_cast<double>(base_) + static_cast<double>(i)) * eps_;
        emax_[i] = static_cast<double>(theta * cdf + tail[i + 1]);
    }

    if (params.beta > 0.0 && params.beta < 1.0) {
        pexp_ = (1.0 - params.beta) / params.beta;
        nz_ = static_cast<int>(std::llround(1.0 / eta_));
        const double bytes = 2.0 * static_cast<double>(nth_) * (nz_ + 1) * sizeof(double);
        if (bytes > 6e9)
            throw std::runtime_error(
                "precompute: zeta table would exceed 6 GB; increase epsilon or eta");
        zpow_.resize(static_cast<std::size_t>(nz_) + 1);
        zpow_[0] = 0.0;
        for (int j = 1; j <= nz_; ++j)
            zpow_[static_cast<std::size_t>(j)] = std::pow(j * eta_, pexp_);

        const std::size_t row = static_cast<std::size_t>(nz_) + 1;
        pref_lo_.assign(nth_ * row, 0.0);
        pref_up_.assign(nth_ * row, 0.0);
        // The integrand equals E[max(g, z^p * r)], so across one zeta cell it
        // moves by at most d(z^p) * E[r+] upward and d(z^p) * E[r-] downward.
        // That Lipschitz bracket stays valid even where the integrand is not
        // monotone in z (rewards of mixed sign).
        for (std::size_t gi = 0; gi < nth_; ++gi) {
            const double g = (static_cast<double>(base_) + static_cast<double>(gi)) * eps_;
            double* plo = pref_lo_.data() + gi * row;
            double* pup = pref_up_.data() + gi * row;
            plo[0] = 0.0;
            pup[0] = 0.0;
            double ilo = std::max(g, 0.0);  // exact limit at z = 0
            double iup = ilo;
            for (int j = 0; j < nz_; ++j) {
                const double nlo = integrand(g, j + 1, RoundDir::down);
                const double nup = integrand(g, j + 1, RoundDir::up);
                const double du = zpow_[static_cast<std::size_t>(j) + 1]
                                  - zpow_[static_cast<std::size_t>(j)];
                plo[j + 1] = plo[j]
                             + eta_ * std::max(ilo - du * eneg_, nlo - du * epos_);
                pup[j + 1] = pup[j]
                             + eta_ * std::min(iup + du * epos_, nup + du * eneg_);
                ilo = nlo;
                iup = nup;
            }
        }
    }
}

std::size_t PrecomputeTables::theta_index(double theta, RoundDir dir) const {
    const double x = theta / eps_ - static_cast<double>(base_);
    long long gi;
    switch (dir) {
        case RoundDir::down: gi = static_cast<long long>(std::floor(x + 1e-9)); break;
        case RoundDir::up: gi = static_cast<long long>(std::ceil(x - 1e-9)); break;
        default: gi = std::llround(x); break;
    }
    return static_cast<std::size_t>(std::clamp<long long>(gi, 0, static_cast<long long>(nth_) - 1));
}

double PrecomputeTables::emax(double theta, RoundDir dir) const {
    // Outside the grid the value is exact: all mass is on one side.
    if (theta <= grid_lo()) return mean_;
    if (theta >= grid_hi()) return theta;
    return emax_[theta_index(theta, dir)];
}

double PrecomputeTables::pdf_mass() const {
    return static_cast<double>(binned_count_) / static_cast<double>(total_count_);
}

double PrecomputeTables::integrand(double g, int j, RoundDir dir) const {
    if (j == 0) return std::max(g, 0.0);
    const double zp = zpow_[static_cast<std::size_t>(j)];
    // z^p underflows for tiny beta; the integrand limit is the same as at z = 0.
    if (zp <= 0.0) return std::max(g, 0.0);
    const double theta = g / zp;
    if (!std::isfinite(theta)) return std::max(g, 0.0);
    const double v = zp * emax(theta, dir);
    return std::isfinite(v) ? v : std::max(g, 0.0);
}

double PrecomputeTables::cell_lower(double g, int j) const {
    const double du = zpow_[static_cast<std::size_t>(j) + 1] - zpow_[static_cast<std::size_t>(j)];
    const double i1 = integrand(g, j, RoundDir::down);
    const double i2 = integrand(g, j + 1, RoundDir::down);
    return std::max(i1 - du * eneg_, i2 - du * epos_);
}

double PrecomputeTables::cell_upper(double g, int j) const {
    const double du = zpow_[static_cast<std::size_t>(j) + 1] - zpow_[static_cast<std::size_t>(j)];
    const double i1 = integrand(g, j, RoundDir::up);
    const double i2 = integrand(g, j + 1, RoundDir::up);
    return std::min(i1 + du * epos_, i2 + du * eneg_);
}

double PrecomputeTables::cum_lower(double z, double g) const {
    const std::size_t gi = theta_index(g, RoundDir::down);
    const double gv = (static_cast<double>(base_) + static_cast<double>(gi)) * eps_;
    const double* p = pref_lo_.data() + gi * (static_cast<std::size_t>(nz_) + 1);
    if (z <= 0.0) return 0.0;
    int j = static_cast<int>(std::floor(z / eta_ + 1e-12));
    if (j >= nz_) return p[nz_];
    const double frac = z - j * eta_;
    if (frac <= 0.0) return p[j];
    return p[j] + frac * cell_lower(gv, j);
}

double PrecomputeTables::cum_upper(double z, double g) const {
    const std::size_t gi = theta_index(g, RoundDir::up);
    const double gv = (static_cast<double>(base_) + static_cast<double>(gi)) * eps_;
    const double* p = pref_up_.data() + gi * (static_cast<std::size_t>(nz_) + 1);
    if (z <= 0.0) return 0.0;
    int j = static_cast<int>(std::floor(z / eta_ + 1e-12));
    if (j >= nz_) return p[nz_];
    const double frac = z - j * eta_;
    if (frac <= 0.0) return p[j];
    return p[j] + frac * cell_upper(gv, j);
}

double PrecomputeTables::segment_lower(double zlo, double zhi, double g) const {
    if (!has_g_table()) throw std::logic_error("segment_lower: no zeta table for beta in {0,1}");
    if (zhi <= zlo) return 0.0;
    // Above the grid every lookup resolves analytically: the integrand is g.
    if (g >= grid_hi()) return g * (zhi - zlo);
    return cum_lower(zhi, g) - cum_upper(zlo, g);
}

double PrecomputeTables::segment_upper(double zlo, double zhi, double g) const {
    if (!has_g_table()) throw std::logic_error("segment_upper: no zeta table for beta in {0,1}");
    if (zhi <= zlo) return 0.0;
    if (g >= grid_hi()) return g * (zhi - zlo);
    return cum_upper(zhi, g) - cum_lower(zlo, g);
}

namespace {

template <typename Lookup>
CredentialDraw draw_with(const Lookup& lookup, std::size_t n, const SimParams& params,
                         RngStream& rng) {
    const int k = params.credentials;
    CredentialDraw d;
    d.rewards.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        d.rewards[static_cast<std::size_t>(i)] = lookup(rng.uniform_index(n));
    d.scores = sample_order_statistics(params.alpha, k, rng);
    d.scores.push_back(kInf);
    return d;
}

// Run-length view of the sorted previous samples. Grid-aligned or point-mass
// distributions have few distinct values, so the i-th order statistic comes
// from a binary search over a small cumulative-count array instead of a random
// read into the full n-sized sample array. Values are identical either way.
struct CompressedPrev {
    std::vector<double> vals;
    std::vector<std::size_t> cum;  // samples in groups 0..j inclusive
    bool active = false;

    explicit CompressedPrev(const std::vector<double>& s) {
        for (std::size_t i = 0; i < s.size();) {
            std::size_t j = i + 1;
            while (j < s.size() && s[j] == s[i]) ++j;
            vals.push_back(s[i]);
            cum.push_back(j);
            i = j;
        }
        active = vals.size() * 8 <= s.size();
    }

    double operator()(std::size_t idx) const {
        const auto it = std::upper_bound(cum.begin(), cum.end(), idx);
        return vals[static_cast<std::size_t>(it - cum.begin())];
    }
};

// LSD radix sort via the order-preserving bijection doubles -> uint64. The
// merge passes of stable_sort go superlinear per element once the array
// outgrows the cache; counting passes stay sequential, keeping add_layer
// linear in n. Produces the same ascending value sequence.
void sort_samples(std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 32768) {
        std::stable_sort(v.begin(), v.end());
        return;
    }
    std::vector<std::uint64_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t u = std::bit_cast<std::uint64_t>(v[i]);
        a[i] = (u >> 63) ? ~u : (u | 0x8000000000000000ULL);
    }
    for (int pass = 0; pass < 8; ++pass) {
        const int shift = pass * 8;
        std::size_t cnt[256] = {};
        for (std::size_t i = 0; i < n; ++i) ++cnt[(a[i] >> shift) & 0xff];
        if (cnt[(a[0] >> shift) & 0xff] == n) continue;  // whole byte constant
        std::size_t pos[256];
        std::size_t acc = 0;
        for (int j = 0; j < 256; ++j) {
            pos[j] = acc;
            acc += cnt[j];
        }
        for (std::size_t i = 0; i < n; ++i) b[pos[(a[i] >> shift) & 0xff]++] = a[i];
        a.swap(b);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t k = a[i];
        v[i] = std::bit_cast<double>((k >> 63) ? (k ^ 0x8000000000000000ULL) : ~k);
    }
}

} // namespace

CredentialDraw draw_adversary(const RewardDistribution& prev, const SimParams& params,
                              RngStream& rng) {
    return draw_with([&](std::size_t idx) { return prev.samples[idx]; },
                     prev.samples.size(), params, rng);
}

double sample_reward(const PrecomputeTables& tables, const CredentialDraw& draw,
                     const SimParams& params, int /*round_t*/) {
    const int k = params.credentials;
    const double a1 = 1.0 - params.alpha;
    const double beta = params.beta;

    if (beta == 0.0) {
        // The adversary learns nothing before acting: it must commit to its
        // best credential, which wins only if it survives both honest players.
        double g = -kInf;
        for (int i = 0; i < k; ++i) {
            const double v = std::exp(-draw.scores[static_cast<std::size_t>(i)] * a1)
                             * (1.0 + draw.rewards[static_cast<std::size_t>(i)]);
            g = std::max(g, v);
        }
        return g - params.lambda;
    }

    const RoundDir dir = tables.mode() == Envelope::lower ? RoundDir::down
                       : tables.mode() == Envelope::upper ? RoundDir::up
                                                          : RoundDir::nearest;

    if (beta == 1.0) {
        // Full visibility of honest player B: condition on how many
        // adversarial credentials beat B's score.
        double best = -kInf, s = 0.0;
        double w_prev = std::exp(-draw.scores[0] * a1);
        for (int i = 0; i < k; ++i) {
            best = std::max(best, 1.0 + draw.rewards[static_cast<std::size_t>(i)]);
            const double c_next = draw.scores[static_cast<std::size_t>(i) + 1];
            const double w_next = std::isinf(c_next) ? 0.0 : std::exp(-c_next * a1);
            s += tables.emax(best, dir) * (w_prev - w_next);
            w_prev = w_next;
        }
        return s - params.lambda;
    }

    // Partial visibility: integrate over B's score via zeta = e^{-c0*beta*(1-alpha)}.
    double best = -kInf, s_lo = 0.0, s_up = 0.0;
    double zhi = std::exp(-draw.scores[0] * beta * a1);
    for (int i = 0; i < k; ++i) {
        const double v = std::exp(-draw.scores[static_cast<std::size_t>(i)] * (1.0 - beta) * a1)
                         * (1.0 + draw.rewards[static_cast<std::size_t>(i)]);
        best = std::max(best, v);
        const double c_next = draw.scores[static_cast<std::size_t>(i) + 1];
        const double zlo = std::isinf(c_next) ? 0.0 : std::exp(-c_next * beta * a1);
        switch (tables.mode()) {
            case Envelope::lower:
                s_lo += tables.segment_lower(zlo, zhi, best);
                break;
            case Envelope::upper:
                s_up += tables.segment_upper(zlo, zhi, best);
                break;
            case Envelope::raw:
                s_lo += tables.segment_lower(zlo, zhi, best);
                s_up += tables.segment_upper(zlo, zhi, best);
                break;
        }
        zhi = zlo;
    }
    switch (tables.mode()) {
        case Envelope::lower: return s_lo - params.lambda;
        case Envelope::upper: return s_up - params.lambda;
        default: return 0.5 * (s_lo + s_up) - params.lambda;
    }
}

RewardDistribution deflate(RewardDistribution dist, double gamma, double lambda) {
    if (dist.mode != Envelope::raw) throw std::invalid_argument("deflate: input must be raw");
    const std::size_t n = dist.samples.size();
    const double frac = std::sqrt(std::log(1.0 / gamma) / (2.0 * static_cast<double>(n)));
    const std::size_t m = static_cast<std::size_t>(std::ceil(n * frac - 1e-9));
    if (m >= n) throw std::invalid_argument("deflate: deletion count reaches n");
    dist.samples.resize(n - m);
    const double inf_val = -lambda;
    auto pos = std::lower_bound(dist.samples.begin(), dist.samples.end(), inf_val);
    dist.samples.insert(pos, m, inf_val);
    dist.mode = Envelope::lower;
    return dist;
}

RewardDistribution inflate(RewardDistribution dist, double gamma, double omega,
                           int round_t, double lambda) {
    if (dist.mode != Envelope::raw) throw std::invalid_argument("inflate: input must be raw");
    const std::size_t n = dist.samples.size();
    const double frac = std::sqrt(std::log(1.0 / gamma) / (2.0 * static_cast<double>(n)));
    const std::size_t m = static_cast<std::size_t>(std::ceil(n * frac - 1e-9));
    const std::size_t block = static_cast<std::size_t>(std::ceil(omega * n - 1e-9));
    const std::size_t reps = static_cast<std::size_t>(std::ceil(frac / omega - 1e-9));
    if (m >= n || reps * block >= n)
        throw std::invalid_argument("inflate: duplication exceeds sample count");

    const double sup = round_t * (1.0 - lambda);
    std::vector<double> out;
    out.reserve(n - m + reps * block);
    out.insert(out.end(), dist.samples.begin() + static_cast<std::ptrdiff_t>(m),
               dist.samples.end());
    out.insert(out.end(), block, sup);
    // reps - 1 further blocks duplicating the largest original samples.
    for (std::size_t l = 1; l < reps; ++l)
        out.insert(out.end(), block, dist.samples[n - l]);
    std::stable_sort(out.begin(), out.end());
    if (out.size() > n) {
        out.erase(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(out.size() - n));
    } else if (out.size() < n) {
        out.insert(out.begin(), n - out.size(), -lambda);
    }
    dist.samples = std::move(out);
    dist.mode = Envelope::upper;
    return dist;
}

RewardDistribution add_layer(const RewardDistribution& prev, const SimParams& params,
                             int round_t, Envelope mode, SaturationStats* sat) {
    SimParams p = params.resolved();
    if (prev.round != round_t - 1) throw std::invalid_argument("add_layer: round mismatch");
    if (prev.samples.empty()) throw std::invalid_argument("add_layer: empty distribution");

    const PrecomputeTables tables(prev, p, round_t, mode);
    const CompressedPrev packed(prev.samples);
    const std::size_t n = p.samples;
    std::vector<double> out(n);
    const double lo = -round_t * p.lambda;
    const double hi = round_t * (1.0 - p.lambda);

    SaturationStats local;
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    auto run_chunks = [&](std::size_t first, std::size_t last, SaturationStats* st) {
        for (std::size_t c = first; c < last; ++c) {
            RngStream rng = RngStream::derive(
                p.seed, static_cast<std::uint64_t>(round_t) * 0x100000000ULL + c);
            const std::size_t begin = c * kChunk;
            const std::size_t end = std::min(begin + kChunk, n);
            for (std::size_t i = begin; i < end; ++i) {
                const CredentialDraw d = packed.active
                    ? draw_with(packed, prev.samples.size(), p, rng)
                    : draw_adversary(prev, p, rng);
                double s = sample_reward(tables, d, p, round_t);
                if (s < lo) {
                    if (s < lo - 1e-9) ++st->support_clamps;
                    s = lo;
                } else if (s > hi) {
                    if (s > hi + 1e-9) ++st->support_clamps;
                    s = hi;
                }
                if (mode == Envelope::lower)
                    s = std::max(std::floor(s / p.epsilon) * p.epsilon, lo);
                else if (mode == Envelope::upper)
                    s = std::min(std::ceil(s / p.epsilon) * p.epsilon, hi);
                out[i] = s;
            }
        }
    };

    const int workers = std::min<int>(p.workers, static_cast<int>(nchunks));
    if (workers <= 1) {
        run_chunks(0, nchunks, &local);
    } else {
        std::vector<SaturationStats> stats(static_cast<std::size_t>(workers));
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const std::size_t first = nchunks * static_cast<std::size_t>(w)
                                      / static_cast<std::size_t>(workers);
            const std::size_t last = nchunks * (static_cast<std::size_t>(w) + 1)
                                     / static_cast<std::size_t>(workers);
            threads.emplace_back(run_chunks, first, last, &stats[static_cast<std::size_t>(w)]);
        }
        for (auto& t : threads) t.join();
        for (const auto& st : stats) local.merge(st);
    }
    if (sat) sat->merge(local);

    sort_samples(out);
    RewardDistribution result;
    result.samples = std::move(out);
    result.round = round_t;
    result.lambda = p.lambda;
    result.mode = Envelope::raw;
    if (mode == Envelope::lower) result = deflate(std::move(result), p.gamma, p.lambda);
    else if (mode == Envelope::upper) result = inflate(std::move(result), p.gamma, p.omega, round_t, p.lambda);
    return result;
}

std::string checkpoint_path(const SimParams& params, Envelope mode, int round_t) {
    std::ostringstream oss;
    oss << params.checkpoint_dir << '/' << params.checkpoint_tag << '_' << to_string(mode)
        << "_r" << round_t << ".txt";
    return oss.str();
}

void write_checkpoint(const RewardDistribution& dist, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", dist.support_lo(), dist.support_hi());
    f << "round " << dist.round << ' ' << dist.samples.size() << ' ' << to_string(dist.mode)
      << ' ' << buf << '\n';
    for (double s : dist.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g", s);
        f << buf << '\n';
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

RewardDistribution read_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string key, mode_str;
    int round = 0;
    std::size_t n = 0;
    double lo = 0.0, hi = 0.0;
    f >> key >> round >> n >> mode_str >> lo >> hi;
    if (!f || key != "round") throw std::runtime_error("malformed checkpoint header: " + path);
    RewardDistribution d;
    d.round = round;
    d.mode = envelope_from_string(mode_str);
    d.lambda = round > 0 ? -lo / round : 0.0;
    d.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(f >> d.samples[i])) throw std::runtime_error("truncated checkpoint: " + path);
    }
    return d;
}

SimResult truncated_simulate(const SimParams& params, Envelope mode) {
    SimParams p = params.resolved();
    p.validate();

    RewardDistribution cur = RewardDistribution::point_mass(0.0, p.samples, p.lambda, mode);
    int start = 1;
    if (!p.checkpoint_dir.empty()) {
        std::filesystem::create_directories(p.checkpoint_dir);
        for (int t = p.rounds; t >= 1; --t) {
            const std::string path = checkpoint_path(p, mode, t);
            if (!std::filesystem::exists(path)) continue;
            RewardDistribution d = read_checkpoint(path);
            if (d.round == t && d.samples.size() == p.samples
                && std::abs(d.lambda - p.lambda) < 1e-12) {
                cur = std::move(d);
                start = t + 1;
                break;
            }
        }
    }

    SimResult res;
    for (int t = start; t <= p.rounds; ++t) {
        cur = add_layer(cur, p, t, mode, &res.sat);
        if (!p.checkpoint_dir.empty()) write_checkpoint(cur, checkpoint_path(p, mode, t));
    }
    res.mean = cur.mean();
    res.dist = std::move(cur);

    const double n = static_cast<double>(p.samples);
    const double dkw = std::sqrt(std::log(1.0 / p.gamma) / (2.0 * n));
    if (mode == Envelope::lower) {
        res.failure_probability = p.rounds * p.gamma;
    } else if (mode == Envelope::upper) {
        res.failure_probability =
            p.rounds * (p.gamma + std::exp(-p.omega * n) / p.omega * dkw);
    } else {
        res.failure_probability = 0.0;
    }
    return res;
}

} // namespace csspa
