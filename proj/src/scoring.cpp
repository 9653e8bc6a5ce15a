#include "scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace csspa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double log_score(double x, double alpha) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("log_score: x outside [0,1]");
    if (!(alpha >= 0.0)) throw std::domain_error("log_score: negative stake");
    if (alpha == 0.0) return kInf;
    if (x == 0.0) return 0.0;
    return -std::log(x) / alpha;
}

double exponential_icdf(double u, double rate) {
    if (!(rate > 0.0)) throw std::domain_error("exponential_icdf: rate must be positive");
    if (!(u > 0.0 && u <= 1.0)) throw std::domain_error("exponential_icdf: u outside (0,1]");
    return -std::log(u) / rate;
}

double sample_exponential(double rate, RngStream& rng) {
    return exponential_icdf(rng.next_unit(), rate);
}

std::vector<double> sample_order_statistics(double alpha, int k, RngStream& rng) {
    if (!(alpha > 0.0)) throw std::domain_error("sample_order_statistics: stake must be positive");
    if (k < 1) throw std::domain_error("sample_order_statistics: k must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += sample_exponential(alpha, rng);
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

double survival(double s, double alpha) {
    if (!(s >= 0.0)) throw std::domain_error("survival: s must be non-negative");
    if (!(alpha >= 0.0)) throw std::domain_error("survival: negative stake");
    return std::exp(-alpha * s);
}

double min_split_sample(std::span<const double> stakes, RngStream& rng) {
    double best = kInf;
    for (double a : stakes) {
        if (a < 0.0) throw std::domain_error("min_split_sample: negative stake");
        double s = log_score(rng.next_unit(), a);
        best = std::min(best, s);
    }
    return best;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = cdf(sample[i]);
        double lo = static_cast<double>(i) / static_cast<double>(n);
        double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max({d, std::abs(f - lo), std::abs(hi - f)});
    }
    return d;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size(), m = b.size();
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < n && j < m) {
        if (a[i] <= b[j]) ++i; else ++j;
        double fa = static_cast<double>(i) / static_cast<double>(n);
        double fb = static_cast<double>(j) / static_cast<double>(m);
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

double ks_critical(double level, std::size_t n) {
    double c = std::sqrt(-0.5 * std::log(level / 2.0));
    return c / std::sqrt(static_cast<double>(n));
}

double two_sample_ks_critical(double level, std::size_t n, std::size_t m) {
    double c = std::sqrt(-0.5 * std::log(level / 2.0));
    double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

std::vector<ScoringCheck> scoring_selftest(std::uint64_t seed) {
    std::vector<ScoringCheck> checks;
    const std::size_t n = 100000;
    const double level = 0.01;
    std::uint64_t stream = 0;

    // Power law: survival(s, a) == survival(s, 1)^a across a grid.
    {
        ScoringCheck c{"survival_power_law", 0.0, 1e-15, false};
        for (int i = 1; i <= 100; ++i) {
            double s = 0.05 * i;
            for (double a : {0.1, 0.5, 2.0}) {
                double err = std::abs(survival(s, a) - std::pow(survival(s, 1.0), a));
                c.statistic = std::max(c.statistic, err);
            }
        }
        c.pass = c.statistic <= c.threshold;
        checks.push_back(c);
    }

    // Gaps between consecutive order statistics are i.i.d. Exp(alpha).
    {
        const double alpha = 0.7;
        RngStream rng = RngStream::derive(seed, stream++);
        std::vector<double> gaps;
        gaps.reserve(n);
        while (gaps.size() < n) {
            auto ys = sample_order_statistics(alpha, 4, rng);
            for (std::size_t i = ys.size(); i-- > 1;) gaps.push_back(ys[i] - ys[i - 1]);
            gaps.push_back(ys[0]);
        }
        gaps.resize(n);
        auto cdf = [alpha](double x) { return 1.0 - std::exp(-alpha * x); };
        ScoringCheck c{"order_statistic_gaps_ks", ks_statistic(gaps, cdf), ks_critical(level, n), false};
        c.pass = c.statistic < c.threshold;
        checks.push_back(c);
    }

    // Stake splitting leaves the minimum score's distribution unchanged.
    for (int parts : {2, 5, 10}) {
        for (double alpha : {0.1, 0.5, 1.0}) {
            RngStream rng = RngStream::derive(seed, stream++);
            std::vector<double> stakes(static_cast<std::size_t>(parts), alpha / parts);
            std::vector<double> split(n), whole(n);
            for (std::size_t i = 0; i < n; ++i) split[i] = min_split_sample(stakes, rng);
            for (std::size_t i = 0; i < n; ++i) whole[i] = sample_exponential(alpha, rng);
            ScoringCheck c;
            c.name = "split_ks_n" + std::to_string(parts) + "_a" + std::to_string(alpha).substr(0, 3);
            c.statistic = two_sample_ks(std::move(split), std::move(whole));
            c.threshold = two_sample_ks_critical(level, n, n);
            c.pass = c.statistic < c.threshold;
            checks.push_back(c);
        }
    }

    // Pr(wallet j holds the minimum) is proportional to its stake.
    {
        RngStream rng = RngStream::derive(seed, stream++);
        const double stakes[] = {0.1, 0.3, 0.6};
        std::size_t wins[3] = {0, 0, 0};
        for (std::size_t trial = 0; trial < n; ++trial) {
            double best = kInf;
            int arg = 0;
            for (int j = 0; j < 3; ++j) {
                double s = log_score(rng.next_unit(), stakes[j]);
                if (s < best) { best = s; arg = j; }
            }
            ++wins[static_cast<std::size_t>(arg)];
        }
        for (int j = 0; j < 3; ++j) {
            double p = stakes[j] / 1.0;
            double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
            ScoringCheck c;
            c.name = "min_attainment_" + std::to_string(j);
            c.statistic = std::abs(static_cast<double>(wins[j]) / static_cast<double>(n) - p);
            c.threshold = 3.0 * sigma;
            c.pass = c.statistic < c.threshold;
            checks.push_back(c);
        }
    }

    return checks;
}

} // namespace csspa
