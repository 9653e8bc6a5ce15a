// Batch front-end: single points, (alpha, beta) sweeps, omniscient curves and
// scoring self-tests, emitted as CSV rows suitable for plotting.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "csspa.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t point_seed(std::uint64_t base, double alpha, double beta, std::size_t index) {
    std::uint64_t h = mix64(std::bit_cast<std::uint64_t>(alpha));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(beta));
    h = mix64(h ^ static_cast<std::uint64_t>(index));
    return base ^ h;
}

std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream iss(spec);
    if (!(iss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
        throw CLI::ValidationError("grid must be lo:hi:step with step > 0: " + spec);
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + 1e-12) break;
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError("empty grid: " + spec);
    return out;
}

// Writes rows strictly in task order while tasks complete out of order, so
// partial output files stay well-formed prefixes.
class OrderedWriter {
public:
    OrderedWriter(std::ostream& os, std::size_t n) : os_(os), rows_(n), done_(n, false) {}

    void put(std::size_t i, std::string row) {
        std::lock_guard<std::mutex> lock(mu_);
        rows_[i] = std::move(row);
        done_[i] = true;
        while (next_ < rows_.size() && done_[next_]) {
            if (!rows_[next_].empty()) os_ << rows_[next_] << '\n';
            os_.flush();
            ++next_;
        }
    }

private:
    std::ostream& os_;
    std::vector<std::string> rows_;
    std::vector<bool> done_;
    std::size_t next_ = 0;
    std::mutex mu_;
};

struct Options {
    std::string mode = "point";
    double alpha = 0.1;
    double beta = 1.0;
    double lambda = -1.0;  // < 0 means "search"
    std::string alpha_grid, beta_grid;
    int rounds = 10;
    int credentials = 6;
    std::uint64_t samples = 100000;
    double gamma = 0.0;
    double omega = 0.0;
    double epsilon = 1e-4;
    double eta = 1e-3;
    double zeta = 5e-4;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string checkpoint_dir;
    int workers = 1;
    std::string envelope = "both";
};

const char* kEngineHeader =
    "alpha,beta,T,k,n,gamma,omega,epsilon,eta,seed,lambda_lo,lambda_hi,"
    "marginal_lower,marginal_upper,truncation_error,failure_probability,wall_seconds";

csspa_params base_params(const Options& opt) {
    csspa_params p;
    csspa_params_init(&p);
    p.alpha = opt.alpha;
    p.beta = opt.beta;
    p.lambda = opt.lambda >= 0.0 ? opt.lambda : 0.0;
    p.rounds = opt.rounds;
    p.credentials = opt.credentials;
    p.samples = opt.samples;
    p.gamma = opt.gamma;
    p.omega = opt.omega;
    p.epsilon = opt.epsilon;
    p.eta = opt.eta;
    p.seed = opt.seed;
    p.workers = 1;
    return p;
}

// One engine grid point; returns false on numerical failure (row still emitted).
bool run_point(const Options& opt, double alpha, double beta, std::size_t index,
               const std::string& tag, std::string& row) {
    csspa_params p = base_params(opt);
    p.alpha = alpha;
    p.beta = beta;
    p.seed = point_seed(opt.seed, alpha, beta, index);
    // A lone point threads the sampler; sweeps parallelize across points.
    if (opt.mode == "point") p.workers = std::max(1, opt.workers);
    if (!opt.checkpoint_dir.empty()) p.checkpoint_dir = opt.checkpoint_dir.c_str();
    p.checkpoint_tag = tag.c_str();

    const auto t0 = std::chrono::steady_clock::now();
    double lambda_lo = std::nan(""), lambda_hi = std::nan("");
    double mlo = std::nan(""), mhi = std::nan("");
    double trunc = std::nan(""), fp = std::nan("");
    bool ok = true;

    if (opt.envelope == "both") {
        csspa_bound_report rep;
        const int rc = csspa_lambda_search(&p, opt.zeta, 0, &rep);
        if (rc == CSSPA_OK) {
            lambda_lo = rep.lambda_lo;
            lambda_hi = rep.lambda_hi;
            csspa_marginal_reward(&rep, &mlo, &mhi);
            trunc = rep.truncation_error;
            fp = rep.failure_probability;
        } else {
            std::cerr << "point alpha=" << alpha << " beta=" << beta << " failed: "
                      << csspa_last_error() << "\n";
            ok = false;
        }
    } else {
        // Fixed-fee run of a single chain; the mean lands in both marginal
        // columns since no bracket is produced.
        const int env = opt.envelope == "raw" ? CSSPA_ENV_RAW
                       : opt.envelope == "lower" ? CSSPA_ENV_LOWER
                                                 : CSSPA_ENV_UPPER;
        double mean = 0.0;
        const int rc = csspa_simulate(&p, env, &mean, &fp, nullptr);
        if (rc == CSSPA_OK) {
            lambda_lo = lambda_hi = p.lambda;
            mlo = mhi = mean;
            trunc = 0.0;
        } else {
            std::cerr << "point alpha=" << alpha << " beta=" << beta << " failed: "
                      << csspa_last_error() << "\n";
            ok = false;
        }
    }

    const double wall = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << fmt(alpha) << ',' << fmt(beta) << ',' << opt.rounds << ',' << opt.credentials
       << ',' << opt.samples << ',' << fmt(opt.gamma) << ',' << fmt(opt.omega) << ','
       << fmt(opt.epsilon) << ',' << fmt(opt.eta) << ',' << p.seed << ','
       << fmt(lambda_lo) << ',' << fmt(lambda_hi) << ',' << fmt(mlo) << ',' << fmt(mhi)
       << ',' << fmt(trunc) << ',' << fmt(fp) << ',' << fmt(wall);
    row = os.str();
    return ok;
}

// Keys of rows already present in the output file, for sweep resumption.
std::set<std::string> existing_keys(const std::string& path, int fields) {
    std::set<std::string> keys;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || !(std::isdigit(line[0]) || line[0] == '-' || line[0] == '.'))
            continue;
        std::size_t pos = 0;
        for (int i = 0; i < fields; ++i) {
            pos = line.find(',', pos);
            if (pos == std::string::npos) break;
            ++pos;
        }
        keys.insert(line.substr(0, pos == std::string::npos ? line.size() : pos - 1));
    }
    return keys;
}

int run_engine_modes(const Options& opt, std::ostream& os, bool fresh_header,
                     const std::set<std::string>& skip) {
    std::vector<std::pair<double, double>> points;
    if (opt.mode == "point") {
        points.emplace_back(opt.alpha, opt.beta);
    } else if (opt.mode == "alpha_sweep") {
        const auto grid = parse_grid(opt.alpha_grid.empty() ? "0.05:0.25:0.05" : opt.alpha_grid);
        for (double a : grid) points.emplace_back(a, opt.beta);
    } else {
        const auto grid = parse_grid(opt.beta_grid.empty() ? "0:1:0.25" : opt.beta_grid);
        for (double b : grid) points.emplace_back(opt.alpha, b);
    }
    for (const auto& [a, b] : points) {
        if (!(a > 0.0 && a <= 0.29)) {
            std::cerr << "alpha " << a << " outside (0, 0.29]\n";
            return kExitConfig;
        }
        if (!(b >= 0.0 && b <= 1.0)) {
            std::cerr << "beta " << b << " outside [0, 1]\n";
            return kExitConfig;
        }
    }

    if (fresh_header) os << kEngineHeader << '\n';
    OrderedWriter writer(os, points.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> all_ok{true};

    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= points.size()) return;
            const auto [a, b] = points[i];
            const std::string key = fmt(a) + "," + fmt(b);
            if (skip.count(key)) {
                writer.put(i, "");
                continue;
            }
            std::string tag = "pt" + std::to_string(i);
            std::string row;
            if (!run_point(opt, a, b, i, tag, row)) all_ok = false;
            writer.put(i, std::move(row));
        }
    };

    const int pool = std::max(1, std::min<int>(opt.workers, static_cast<int>(points.size())));
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < pool; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    return all_ok ? 0 : kExitNumeric;
}

int run_omniscient(const Options& opt, std::ostream& os, bool fresh_header,
                   const std::set<std::string>& skip) {
    const auto grid = parse_grid(opt.alpha_grid.empty() ? "0.01:0.29:0.01" : opt.alpha_grid);
    for (double a : grid) {
        if (!(a > 0.0 && a <= 0.38)) {
            std::cerr << "alpha " << a << " outside (0, 0.38]\n";
            return kExitConfig;
        }
    }
    if (fresh_header) os << "alpha,tight_upper,closed_form_upper,fhwy_upper\n";
    for (double a : grid) {
        if (skip.count(fmt(a))) continue;
        csspa_omni_bound b;
        if (csspa_omniscient_bound(a, 0.0, 0, &b) != CSSPA_OK) {
            std::cerr << "omniscient bound failed at alpha=" << a << ": "
                      << csspa_last_error() << "\n";
            return kExitNumeric;
        }
        double closed = std::nan(""), fhwy = std::nan("");
        if (a < csspa_kappa()) csspa_closed_form_bounds(a, nullptr, &closed, &fhwy);
        os << fmt(a) << ',' << fmt(b.reward_upper - a) << ','
           << fmt(closed - a) << ',' << fmt(fhwy - a) << '\n';
    }
    return 0;
}

int run_scoring(const Options& opt, std::ostream& os, bool fresh_header) {
    int count = 0;
    csspa_scoring_selftest(opt.seed, nullptr, 0, &count);
    std::vector<csspa_check> checks(static_cast<std::size_t>(count));
    if (csspa_scoring_selftest(opt.seed, checks.data(), count, &count) != CSSPA_OK) {
        std::cerr << "scoring self-test failed: " << csspa_last_error() << "\n";
        return kExitNumeric;
    }
    if (fresh_header) os << "name,statistic,threshold,pass\n";
    bool all = true;
    for (const auto& c : checks) {
        os << c.name << ',' << fmt(c.statistic) << ',' << fmt(c.threshold) << ','
           << c.pass << '\n';
        if (!c.pass) all = false;
    }
    return all ? 0 : kExitNumeric;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Reward-bound estimation for self-selection leader election"};
    app.set_config("--config", "", "key=value configuration file");
    app.add_option("--mode", opt.mode, "point | alpha_sweep | beta_sweep | omniscient_curves | scoring_tests")
        ->check(CLI::IsMember({"point", "alpha_sweep", "beta_sweep", "omniscient_curves", "scoring_tests"}));
    app.add_option("--alpha", opt.alpha, "adversarial stake");
    app.add_option("--beta", opt.beta, "visible honest-stake fraction");
    app.add_option("--lambda", opt.lambda, "fixed entry fee for single-chain envelope runs");
    app.add_option("--alpha-grid", opt.alpha_grid, "lo:hi:step");
    app.add_option("--beta-grid", opt.beta_grid, "lo:hi:step");
    app.add_option("--rounds", opt.rounds, "truncation depth T");
    app.add_option("--credentials", opt.credentials, "scores kept per round k");
    app.add_option("--samples", opt.samples, "Monte Carlo samples per round n");
    app.add_option("--gamma", opt.gamma, "envelope failure probability per round (0 = auto)");
    app.add_option("--omega", opt.omega, "upper-envelope duplication fraction (0 = auto)");
    app.add_option("--epsilon", opt.epsilon, "reward grid step");
    app.add_option("--eta", opt.eta, "integration grid step");
    app.add_option("--zeta", opt.zeta, "bisection tolerance");
    app.add_option("--seed", opt.seed, "base RNG seed");
    app.add_option("--out", opt.out_path, "CSV output file (default stdout)");
    app.add_option("--checkpoint", opt.checkpoint_dir, "per-round checkpoint directory");
    app.add_option("--workers", opt.workers, "worker threads");
    app.add_option("--envelope", opt.envelope, "upper | lower | both | raw")
        ->check(CLI::IsMember({"upper", "lower", "both", "raw"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (opt.envelope != "both" && opt.lambda < 0.0) {
        std::cerr << "--envelope " << opt.envelope << " requires --lambda\n";
        return kExitConfig;
    }
    if (opt.lambda >= 1.0) {
        std::cerr << "--lambda must be below 1\n";
        return kExitConfig;
    }

    std::ofstream file;
    bool fresh_header = true;
    std::set<std::string> skip;
    if (!opt.out_path.empty()) {
        std::ifstream probe(opt.out_path);
        const bool nonempty = probe && probe.peek() != std::ifstream::traits_type::eof();
        probe.close();
        if (nonempty) {
            fresh_header = false;
            skip = existing_keys(opt.out_path, opt.mode == "omniscient_curves" ? 1 : 2);
        }
        file.open(opt.out_path, std::ios::app);
        if (!file) {
            std::cerr << "cannot open output file " << opt.out_path << "\n";
            return kExitConfig;
        }
    }
    std::ostream& os = opt.out_path.empty() ? std::cout : file;

    try {
        if (opt.mode == "omniscient_curves") return run_omniscient(opt, os, fresh_header, skip);
        if (opt.mode == "scoring_tests") return run_scoring(opt, os, fresh_header);
        return run_engine_modes(opt, os, fresh_header, skip);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
}
