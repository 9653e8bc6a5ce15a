#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include "engine.hpp"
#include "scoring.hpp"

using namespace csspa;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SimParams desk(double alpha, double beta, double lambda) {
    SimParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.lambda = lambda;
    p.rounds = 5;
    p.credentials = 4;
    p.samples = 20000;
    p.epsilon = 1e-3;
    p.eta = 1e-3;
    p.seed = 99;
    return p.resolved();
}

RewardDistribution hand_prev() {
    RewardDistribution d;
    d.samples = {-0.2, 0.1, 0.3, 0.6};
    d.round = 1;
    d.lambda = 0.25;
    d.mode = Envelope::raw;
    return d;
}

double sample_stddev(const std::vector<double>& xs) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / (xs.size() - 1));
}

} // namespace

TEST_CASE("parameter validation") {
    SimParams p = desk(0.1, 1.0, 0.1);
    CHECK_NOTHROW(p.validate());
    SimParams q = p;
    q.alpha = 0.3;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.gamma = 1.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.gamma = 0.5;  // deletes far more than one sample: still valid
    CHECK_NOTHROW(q.validate());
    q.gamma = std::exp(-1.0 / static_cast<double>(q.samples));  // n*frac < 1
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.omega = 1e-9;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.epsilon = 3e-4;  // 1/epsilon not integral
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.credentials = 0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    CHECK(p.deletion_count() == 1);  // auto gamma = exp(-2/n)
}

TEST_CASE("draw_adversary structure and degenerate rewards") {
    SimParams p = desk(0.25, 1.0, 0.1);
    p.credentials = 3;
    RewardDistribution prev = RewardDistribution::point_mass(0.0, 100, p.lambda);
    RngStream rng = RngStream::derive(7, 0);
    const CredentialDraw d = draw_adversary(prev, p, rng);
    REQUIRE(d.scores.size() == 4);
    REQUIRE(d.rewards.size() == 3);
    CHECK(d.scores[3] == kInf);
    CHECK(d.scores[0] > 0.0);
    CHECK(d.scores[1] > d.scores[0]);
    CHECK(d.scores[2] > d.scores[1]);
    for (double r : d.rewards) CHECK(r == 0.0);
}

TEST_CASE("first score has mean 1/alpha") {
    SimParams p = desk(0.25, 1.0, 0.1);
    p.credentials = 1;
    RewardDistribution prev = RewardDistribution::point_mass(0.0, 10, p.lambda);
    RngStream rng = RngStream::derive(11, 0);
    double acc = 0.0;
    const std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) acc += draw_adversary(prev, p, rng).scores[0];
    CHECK(acc / n == doctest::Approx(4.0).epsilon(0.008));
}

TEST_CASE("precompute tables on a point mass") {
    SimParams p = desk(0.1, 1.0, 0.1);
    p.epsilon = 0.05;
    RewardDistribution prev = RewardDistribution::point_mass(0.0, 50, p.lambda);
    const PrecomputeTables tb(prev, p, 1, Envelope::raw);
    CHECK(tb.pdf_mass() == 1.0);
    CHECK(tb.emax(0.5, RoundDir::nearest) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tb.emax(-0.3, RoundDir::nearest) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tb.emax(0.0, RoundDir::nearest) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tb.emax(1.0, RoundDir::nearest) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(PrecomputeTables(prev, p, 2, Envelope::raw), std::invalid_argument);
}

TEST_CASE("precompute endpoint identities on a hand-built set") {
    SimParams p = desk(0.1, 1.0, 0.25);
    p.epsilon = 0.05;
    const RewardDistribution prev = hand_prev();
    const PrecomputeTables tb(prev, p, 2, Envelope::raw);
    CHECK(tb.pdf_mass() == 1.0);
    const double mean = 0.2;  // (-0.2 + 0.1 + 0.3 + 0.6) / 4
    // At the support top every reward is below theta; at the bottom none are.
    CHECK(tb.emax(prev.samples.back(), RoundDir::nearest)
          == doctest::Approx(prev.samples.back()).epsilon(1e-12));
    CHECK(tb.emax(-0.25, RoundDir::nearest) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(tb.emax(0.1, RoundDir::nearest)
          == doctest::Approx(0.1 * 0.5 + (0.3 + 0.6) / 4.0).epsilon(1e-12));
    // Monotone in theta.
    double last = -kInf;
    for (double th = -0.4; th <= 1.7; th += 0.01) {
        const double v = tb.emax(th, RoundDir::nearest);
        CHECK(v >= last - 1e-12);
        last = v;
    }
    // Direction rounding brackets the nearest value.
    CHECK(tb.emax(0.1234, RoundDir::down) <= tb.emax(0.1234, RoundDir::up));
}

TEST_CASE("sample_reward at full connectivity with zero-score credential") {
    SimParams p = desk(0.1, 1.0, 0.1);
    p.epsilon = 0.05;
    p.credentials = 1;
    RewardDistribution prev = RewardDistribution::point_mass(0.0, 50, p.lambda);
    const PrecomputeTables tb(prev, p, 1, Envelope::raw);
    CredentialDraw d;
    d.scores = {0.0, kInf};
    d.rewards = {0.0};
    CHECK(sample_reward(tb, d, p, 1) == doctest::Approx(0.9).epsilon(1e-12));

    // Non-zero score: e^{-c(1-alpha)} - lambda.
    d.scores = {0.5, kInf};
    CHECK(sample_reward(tb, d, p, 1)
          == doctest::Approx(std::exp(-0.5 * 0.9) - 0.1).epsilon(1e-12));
}

TEST_CASE("sample_reward at zero connectivity") {
    SimParams p = desk(0.1, 0.0, 0.1);
    p.epsilon = 0.05;
    p.credentials = 2;
    RewardDistribution prev = RewardDistribution::point_mass(0.0, 50, p.lambda);
    const PrecomputeTables tb(prev, p, 1, Envelope::raw);
    CredentialDraw d;
    d.scores = {0.0, 0.5, kInf};
    d.rewards = {0.0, 0.0};
    CHECK(sample_reward(tb, d, p, 1) == doctest::Approx(1.0 - 0.1).epsilon(1e-12));
}

TEST_CASE("general beta converges to both endpoint formulas on fixed draws") {
    const RewardDistribution prev = hand_prev();
    CredentialDraw d;
    d.scores = {0.3, 0.9, kInf};
    d.rewards = {0.1, 0.6};

    SimParams p = desk(0.12, 1.0, 0.25);
    p.epsilon = 1e-3;
    p.eta = 1e-3;
    p.credentials = 2;

    p.beta = 1.0;
    const PrecomputeTables t1(prev, p, 2, Envelope::raw);
    const double at_one = sample_reward(t1, d, p, 2);
    p.beta = 1.0 - 1e-3;
    const PrecomputeTables t1m(prev, p, 2, Envelope::raw);
    CHECK(std::abs(sample_reward(t1m, d, p, 2) - at_one) <= 0.01);

    p.beta = 0.0;
    const PrecomputeTables t0(prev, p, 2, Envelope::raw);
    const double at_zero = sample_reward(t0, d, p, 2);
    p.beta = 1e-3;
    const PrecomputeTables t0p(prev, p, 2, Envelope::raw);
    CHECK(std::abs(sample_reward(t0p, d, p, 2) - at_zero) <= 0.01);
}

TEST_CASE("segment bounds bracket direct numerical integration") {
    const RewardDistribution prev = hand_prev();
    SimParams p = desk(0.12, 0.4, 0.25);
    p.epsilon = 1e-3;
    p.eta = 1e-3;
    const PrecomputeTables tb(prev, p, 2, Envelope::raw);
    const double pexp = (1.0 - p.beta) / p.beta;
    // Reference integral of E[max(g, z^p r)] over [zlo, zhi] by fine quadrature.
    auto reference = [&](double zlo, double zhi, double g) {
        const int steps = 200000;
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            const double z = zlo + (zhi - zlo) * (i + 0.5) / steps;
            const double zp = std::pow(z, pexp);
            double ev = 0.0;
            for (double r : prev.samples) ev += std::max(g, zp * r);
            acc += ev / prev.samples.size();
        }
        return acc * (zhi - zlo) / steps;
    };
    for (double g : {-0.15, 0.05, 0.4, 1.2}) {
        for (auto [zlo, zhi] : std::vector<std::pair<double, double>>{
                 {0.0, 1.0}, {0.0003, 0.72}, {0.25, 0.251}, {0.9, 1.0}}) {
            const double ref = reference(zlo, zhi, g);
            CHECK(tb.segment_lower(zlo, zhi, g) <= ref + 1e-8);
            CHECK(tb.segment_upper(zlo, zhi, g) >= ref - 1e-8);
            CHECK(tb.segment_upper(zlo, zhi, g) - tb.segment_lower(zlo, zhi, g) <= 0.02);
        }
    }
}

TEST_CASE("deflate replaces the largest samples with the infimum") {
    RewardDistribution d;
    d.round = 1;
    d.lambda = 0.3;
    d.mode = Envelope::raw;
    for (int i = 0; i < 100; ++i) d.samples.push_back(-0.3 + i * 0.01);
    const double mean_before = d.mean();
    const RewardDistribution out = deflate(d, std::exp(-2.0), 0.3);
    REQUIRE(out.samples.size() == 100);
    CHECK(out.mode == Envelope::lower);
    CHECK(std::is_sorted(out.samples.begin(), out.samples.end()));
    // frac = sqrt(2/200) = 0.1: ten copies of -lambda appended at the bottom.
    for (int i = 0; i < 10; ++i) CHECK(out.samples[static_cast<std::size_t>(i)] == -0.3);
    CHECK(out.samples.back() == doctest::Approx(-0.3 + 89 * 0.01));
    CHECK(out.mean() < mean_before);

    RewardDistribution pm = RewardDistribution::point_mass(-0.3, 50, 0.3);
    pm.round = 1;
    const RewardDistribution same = deflate(pm, std::exp(-2.0), 0.3);
    for (double s : same.samples) CHECK(s == -0.3);

    RewardDistribution tiny = RewardDistribution::point_mass(0.0, 4, 0.3);
    tiny.round = 1;
    CHECK_THROWS_AS(deflate(tiny, std::exp(-32.0), 0.3), std::invalid_argument);
    RewardDistribution wrong = RewardDistribution::point_mass(0.0, 10, 0.3);
    wrong.mode = Envelope::lower;
    CHECK_THROWS_AS(deflate(wrong, std::exp(-2.0), 0.3), std::invalid_argument);
}

TEST_CASE("inflate dominates the original quantile for quantile") {
    RewardDistribution d;
    d.round = 1;
    d.lambda = 0.3;
    d.mode = Envelope::raw;
    for (int i = 0; i < 20; ++i) d.samples.push_back(-0.3 + i * 0.05);
    const std::vector<double> original = d.samples;
    // frac = 0.1 -> delete 2; omega = 0.05 -> blocks of 1, M = 2.
    const double gamma = std::exp(-0.4);
    const RewardDistribution out = inflate(d, gamma, 0.05, 1, 0.3);
    REQUIRE(out.samples.size() == 20);
    CHECK(out.mode == Envelope::upper);
    CHECK(std::is_sorted(out.samples.begin(), out.samples.end()));
    CHECK(out.samples.back() == doctest::Approx(0.7));  // supremum t(1-lambda)
    for (std::size_t i = 0; i < 20; ++i) CHECK(out.samples[i] >= original[i]);

    RewardDistribution pm = RewardDistribution::point_mass(0.7, 40, 0.3);
    pm.round = 1;
    const RewardDistribution same = inflate(pm, std::exp(-2.0), 0.05, 1, 0.3);
    REQUIRE(same.samples.size() == 40);
    for (double s : same.samples) CHECK(s == 0.7);

    // omega large enough that only supremum copies are appended (M = 1).
    RewardDistribution e;
    e.round = 1;
    e.lambda = 0.3;
    e.mode = Envelope::raw;
    for (int i = 0; i < 20; ++i) e.samples.push_back(-0.3 + i * 0.05);
    const RewardDistribution sup_only = inflate(e, std::exp(-0.4), 0.2, 1, 0.3);
    REQUIRE(sup_only.samples.size() == 20);
    // Two deleted, one block of four appended, two surplus trimmed: the top
    // four all sit at the supremum.
    CHECK(sup_only.samples[16] == doctest::Approx(0.7));
}

TEST_CASE("envelope chains stay ordered and inside the support") {
    for (double beta : {1.0, 0.5}) {
        SimParams p = desk(0.15, beta, 0.15);
        if (beta == 0.5) {
            p.rounds = 2;
            p.samples = 5000;
            p.epsilon = 1e-2;
        }
        RewardDistribution lo_d = RewardDistribution::point_mass(0.0, p.samples, p.lambda, Envelope::lower);
        RewardDistribution up_d = RewardDistribution::point_mass(0.0, p.samples, p.lambda, Envelope::upper);
        RewardDistribution raw_d = RewardDistribution::point_mass(0.0, p.samples, p.lambda);
        SaturationStats sat;
        for (int t = 1; t <= p.rounds; ++t) {
            lo_d = add_layer(lo_d, p, t, Envelope::lower, &sat);
            up_d = add_layer(up_d, p, t, Envelope::upper, &sat);
            raw_d = add_layer(raw_d, p, t, Envelope::raw, &sat);
            REQUIRE(lo_d.samples.size() == p.samples);
            REQUIRE(up_d.samples.size() == p.samples);
            const double lo = -t * p.lambda, hi = t * (1.0 - p.lambda);
            for (std::size_t i = 0; i < p.samples; ++i) {
                CHECK(lo_d.samples[i] >= lo);
                CHECK(up_d.samples[i] <= hi);
                CHECK(raw_d.samples[i] >= lo);
                CHECK(raw_d.samples[i] <= hi);
                CHECK(up_d.samples[i] >= lo_d.samples[i]);
            }
            CHECK(lo_d.mean() <= raw_d.mean());
            CHECK(raw_d.mean() <= up_d.mean());
        }
        // Exact tables at beta = 1 never leave the support; the coarse
        // epsilon = 1e-2 zeta tables may nudge a few samples back in.
        if (beta == 1.0) CHECK(sat.support_clamps == 0);
        else CHECK(sat.support_clamps <= p.samples * static_cast<std::size_t>(p.rounds));
    }
}

TEST_CASE("one-round raw mean matches alpha - lambda") {
    for (double alpha : {0.1, 0.2}) {
        for (double beta : {0.0, 0.5, 1.0}) {
            SimParams p = desk(alpha, beta, alpha);
            p.rounds = 1;
            RewardDistribution start = RewardDistribution::point_mass(0.0, p.samples, p.lambda);
            const RewardDistribution layer = add_layer(start, p, 1, Envelope::raw);
            const double tol = 4.0 * sample_stddev(layer.samples)
                               / std::sqrt(static_cast<double>(p.samples));
            INFO("alpha=", alpha, " beta=", beta, " mean=", layer.mean(), " tol=", tol);
            CHECK(std::abs(layer.mean()) <= tol);
        }
    }
}

TEST_CASE("simulation determinism is independent of worker count") {
    SimParams p = desk(0.15, 1.0, 0.15);
    p.rounds = 3;
    const SimResult serial = truncated_simulate(p, Envelope::upper);
    p.workers = 4;
    const SimResult parallel = truncated_simulate(p, Envelope::upper);
    REQUIRE(serial.dist.samples.size() == parallel.dist.samples.size());
    CHECK(serial.dist.samples == parallel.dist.samples);
}

TEST_CASE("zero rounds leaves the point mass") {
    SimParams p = desk(0.15, 1.0, 0.15);
    p.rounds = 0;
    const SimResult r = truncated_simulate(p, Envelope::raw);
    CHECK(r.mean == 0.0);
    CHECK(r.dist.round == 0);
    CHECK(r.failure_probability == 0.0);
}

TEST_CASE("failure probability bookkeeping") {
    SimParams p = desk(0.15, 1.0, 0.15);
    p.rounds = 2;
    const double n = static_cast<double>(p.samples);
    const double dkw = std::sqrt(std::log(1.0 / p.gamma) / (2.0 * n));
    const SimResult lo = truncated_simulate(p, Envelope::lower);
    CHECK(lo.failure_probability == doctest::Approx(2.0 * p.gamma).epsilon(1e-12));
    const SimResult up = truncated_simulate(p, Envelope::upper);
    CHECK(up.failure_probability
          == doctest::Approx(2.0 * (p.gamma + std::exp(-p.omega * n) / p.omega * dkw)).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip and resume reproducibly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "csspa_engine_ckpt_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SimParams p = desk(0.15, 1.0, 0.15);
    p.rounds = 3;
    p.checkpoint_dir = dir.string();
    p.checkpoint_tag = "t";
    const SimResult full = truncated_simulate(p, Envelope::lower);
    CHECK(fs::exists(checkpoint_path(p, Envelope::lower, 3)));

    // Round-trip equality of the stored final round.
    const RewardDistribution back = read_checkpoint(checkpoint_path(p, Envelope::lower, 3));
    CHECK(back.round == 3);
    CHECK(back.mode == Envelope::lower);
    CHECK(back.samples == full.dist.samples);

    // Drop the last round and resume: identical result.
    fs::remove(checkpoint_path(p, Envelope::lower, 3));
    const SimResult resumed = truncated_simulate(p, Envelope::lower);
    CHECK(resumed.dist.samples == full.dist.samples);

    // No checkpoints at all: identical result.
    SimParams q = p;
    q.checkpoint_dir.clear();
    const SimResult clean = truncated_simulate(q, Envelope::lower);
    CHECK(clean.dist.samples == full.dist.samples);

    CHECK_THROWS_AS(read_checkpoint((dir / "missing.txt").string()), std::runtime_error);
    fs::remove_all(dir);
}
