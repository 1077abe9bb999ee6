// Command-line entry point: run experiments, the distribution-testing
// reduction, parameter sweeps, and a fast self-check of the core invariants.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "dexperts/aggregation.hpp"
#include "dexperts/harness.hpp"
#include "dexperts/meta.hpp"
#include "dexperts/netsim.hpp"
#include "dexperts/protocols.hpp"

namespace {

using namespace dexperts;

struct CliFlags {
    std::string protocol = "ewa";
    std::string agg = "sum";
    std::string model = "mp";
    std::string dist = "gaussian";
    int n = 100, s = 50, be = 1, bs = 2, K = 0, k_probe = 0;
    long long T = 10000;
    double eta = 0.1, eta_meta = -1;
    bool sparse = false, unbias_max = false;
    std::uint64_t seed = 0;
    int trials = 1;
    std::string out = "results";
    std::string transcript;
};

void add_experiment_flags(CLI::App* cmd, CliFlags& f) {
    std::vector<CLI::Option*> opts;
    opts.push_back(
        cmd->add_option("--protocol", f.protocol, "protocol identifier (ewa, exp3, dewa-s, ...)"));
    opts.push_back(cmd->add_option("--agg", f.agg, "aggregation: sum, pow:q, max, lp:p"));
    opts.push_back(cmd->add_option("--model", f.model, "communication model: mp or bc"));
    opts.push_back(
        cmd->add_option("--dist", f.dist, "stream: gaussian, bernoulli, diffdist, trace:PATH"));
    opts.push_back(cmd->add_option("--n", f.n, "expert count"));
    opts.push_back(cmd->add_option("--s", f.s, "server count"));
    opts.push_back(cmd->add_option("--T", f.T, "horizon in days"));
    opts.push_back(cmd->add_option("--be", f.be, "expert sampling budget b_e"));
    opts.push_back(cmd->add_option("--bs", f.bs, "server sampling budget b_s (b-dewa-s)"));
    opts.push_back(cmd->add_option("--eta", f.eta, "learning rate"));
    opts.push_back(cmd->add_option("--eta-meta", f.eta_meta, "meta learning rate (<=0 = auto)"));
    opts.push_back(cmd->add_option("--K", f.K, "meta-expert count (0 = auto)"));
    opts.push_back(
        cmd->add_option("--k-probe", f.k_probe, "probes per expert for b-dewa-m (0 = auto)"));
    cmd->add_flag("--sparse", f.sparse, "one holding server per expert per day");
    cmd->add_flag("--unbias-max", f.unbias_max, "rescale dewa-m estimates by 1/inclusion");
    opts.push_back(cmd->add_option("--seed", f.seed, "base RNG seed"));
    opts.push_back(cmd->add_option("--trials", f.trials, "independent trials"));
    opts.push_back(cmd->add_option("--out", f.out, "output directory"));
    opts.push_back(
        cmd->add_option("--transcript", f.transcript, "dump trial-0 comm transcript to this file"));
    cmd->add_option("--config", "key=value config file (flags override it)")
        ->expected(1);
    // config values are injected before the user's flags, so the last
    // occurrence (the command line) wins
    for (CLI::Option* o : opts) o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

// Expands "--config FILE" into per-key flag tokens placed right after the
// subcommand, ahead of the explicit flags.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (std::size_t a = 1; a < args.size(); ++a) {
        if (args[a] == "--config" && a + 1 < args.size()) path = args[a + 1];
        else if (args[a].rfind("--config=", 0) == 0) path = args[a].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto end = line.find_last_not_of(" \t\r");
        std::string kv = line.substr(start, end - start + 1);
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ConversionError("config line is not key=value: " + kv);
        std::string key = kv.substr(0, eq);
        for (char& ch : key)
            if (ch == '_') ch = '-';
        tokens.push_back("--" + key + "=" + kv.substr(eq + 1));
    }
    // args[1] is the subcommand; keep --config itself for CLI11 to consume
    std::vector<std::string> merged(args.begin(), args.begin() + std::min<std::size_t>(2, args.size()));
    merged.insert(merged.end(), tokens.begin(), tokens.end());
    merged.insert(merged.end(), args.begin() + std::min<std::size_t>(2, args.size()), args.end());
    return merged;
}

bool parse_aggregation(const std::string& text, AggregationSpec& out, std::string& err) {
    if (text == "sum") {
        out = {Aggregation::Sum, 1, 2.0};
        return true;
    }
    if (text == "max") {
        out = {Aggregation::Max, 1, 2.0};
        return true;
    }
    if (text.rfind("pow:", 0) == 0) {
        out.kind = Aggregation::PowerOfSum;
        out.q = std::atoi(text.c_str() + 4);
        if (out.q < 1) {
            err = "--agg pow:q needs integer q >= 1";
            return false;
        }
        return true;
    }
    if (text.rfind("lp:", 0) == 0) {
        out.kind = Aggregation::Lp;
        out.p = std::atof(text.c_str() + 3);
        if (out.p <= 1.0) {
            err = "--agg lp:p needs p > 1";
            return false;
        }
        return true;
    }
    err = "unknown --agg '" + text + "'";
    return false;
}

bool build_config(const CliFlags& f, bool allow_diffdist, ExperimentConfig& cfg,
                  std::string& err) {
    cfg.n = f.n;
    cfg.s = f.s;
    cfg.T = f.T;
    cfg.b_e = f.be;
    cfg.b_s = f.bs;
    cfg.eta = f.eta;
    cfg.eta_meta = f.eta_meta;
    cfg.K = f.K;
    cfg.k_probe = f.k_probe;
    cfg.unbias_max = f.unbias_max;
    cfg.protocol = f.protocol;
    cfg.seed = f.seed;
    cfg.trials = f.trials;

    if (!parse_aggregation(f.agg, cfg.aggregation, err)) return false;
    cfg.p = cfg.aggregation.p;

    if (f.model == "mp")
        cfg.comm_model = CommModel::MessagePassing;
    else if (f.model == "bc")
        cfg.comm_model = CommModel::Broadcast;
    else {
        err = "unknown --model '" + f.model + "' (mp or bc)";
        return false;
    }

    cfg.stream.sparse = f.sparse;
    if (f.dist == "gaussian")
        cfg.stream.kind = StreamKind::Gaussian;
    else if (f.dist == "bernoulli")
        cfg.stream.kind = StreamKind::Bernoulli;
    else if (f.dist == "diffdist") {
        if (!allow_diffdist) {
            err = "--dist diffdist conflicts with the run subcommand; use the diffdist "
                  "subcommand instead";
            return false;
        }
        cfg.stream.kind = StreamKind::DiffDist;
    } else if (f.dist == "adaptive")
        cfg.stream.kind = StreamKind::AdaptiveGreedy;
    else if (f.dist.rfind("trace:", 0) == 0) {
        cfg.stream.kind = StreamKind::Trace;
        cfg.stream.trace_path = f.dist.substr(6);
    } else {
        err = "unknown --dist '" + f.dist + "'";
        return false;
    }

    const auto problems = validate_config(cfg);
    if (!problems.empty()) {
        std::ostringstream all;
        for (const auto& p : problems) all << p << '\n';
        err = all.str();
        return false;
    }
    return true;
}

int do_run(const CliFlags& f) {
    ExperimentConfig cfg;
    std::string err;
    if (!build_config(f, false, cfg, err)) {
        std::cerr << err << '\n';
        return 2;
    }
    std::vector<CommEvent> transcript;
    if (!f.transcript.empty()) {
        // transcript capture is per-trial; record trial 0 separately
        auto trial0 = run_trial(cfg, 0, &transcript);
        std::ofstream out(f.transcript, std::ios::binary);
        out << format_transcript(transcript);
        (void)trial0;
    }
    const auto result = run_experiment(cfg);
    persist_results(result, cfg, f.out);
    std::cout << "final mean avg regret: " << result.mean_avg_regret.back() << '\n'
              << "mean total words: " << result.mean_total_words << '\n'
              << "ewa ratio: " << result.ewa_ratio << '\n'
              << "wrote " << f.out << "/{regret.csv, comm.json, config.json}\n";
    return 0;
}

int do_sweep(const CliFlags& base_flags, const std::string& vary,
             const std::vector<std::string>& values) {
    if (values.empty()) {
        std::cerr << "sweep needs a non-empty --values list\n";
        return 2;
    }
    if (vary != "be" && vary != "eta" && vary != "T" && vary != "protocol") {
        std::cerr << "--vary must be one of be, eta, T, protocol\n";
        return 2;
    }
    namespace fs = std::filesystem;
    fs::create_directories(base_flags.out);
    std::ofstream summary(fs::path(base_flags.out) / "summary.csv", std::ios::binary);
    summary << "value,final_regret_mean,total_words_mean,ewa_ratio\n";

    for (std::size_t idx = 0; idx < values.size(); ++idx) {
        CliFlags f = base_flags;
        if (vary == "be")
            f.be = std::atoi(values[idx].c_str());
        else if (vary == "eta")
            f.eta = std::atof(values[idx].c_str());
        else if (vary == "T")
            f.T = std::atoll(values[idx].c_str());
        else
            f.protocol = values[idx];
        f.seed = base_flags.seed + idx;  // reproducible yet distinct per value

        ExperimentConfig cfg;
        std::string err;
        if (!build_config(f, false, cfg, err)) {
            std::cerr << "value '" << values[idx] << "': " << err << '\n';
            return 2;
        }
        const auto result = run_experiment(cfg);
        const std::string sub =
            (fs::path(base_flags.out) / (vary + "=" + values[idx])).string();
        persist_results(result, cfg, sub);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%.12g\n", values[idx].c_str(),
                      result.mean_avg_regret.back(), result.mean_total_words,
                      result.ewa_ratio);
        summary << buf;
        std::cout << vary << "=" << values[idx]
                  << " final_regret=" << result.mean_avg_regret.back()
                  << " ewa_ratio=" << result.ewa_ratio << '\n';
    }
    return 0;
}

int do_diffdist(double R, int n, long long T, int s, const std::string& oracle, int trials,
                std::uint64_t seed) {
    const auto result = run_diffdist(R, n, T, s, oracle, trials, seed);
    std::cout << "c = " << result.c << ", eps = " << result.eps << '\n';
    for (const auto& out : result.outcomes)
        std::cout << "truth=" << (out.truth_case_a ? 'A' : 'B')
                  << " C_hat=" << out.C_hat << " threshold=" << out.threshold
                  << " verdict=" << (out.verdict_case_a ? 'A' : 'B') << '\n';
    std::cout << "accuracy: " << result.accuracy << '\n';
    return 0;
}

// Fast invariant suite: exact pivot law, gamma constants, estimator
// unbiasedness at reduced replicates, ledger exactness, determinism.
int do_selftest() {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "[pass] " : "[FAIL] ") << name << '\n';
        if (!ok) ++failures;
    };

    // Pivot law by exhaustive enumeration, s = 2..6.
    for (int s = 2; s <= 6; ++s) {
        std::vector<int> perm(static_cast<std::size_t>(s));
        std::iota(perm.begin(), perm.end(), 0);
        long long sum_pow = 0, count = 0;
        do {
            int best = -1, updates = 0;
            for (int v : perm)
                if (v > best) {
                    best = v;
                    ++updates;
                }
            sum_pow += 1LL << updates;
            ++count;
        } while (std::next_permutation(perm.begin(), perm.end()));
        check("pivot law E[2^X] = s+1 at s=" + std::to_string(s),
              sum_pow == static_cast<long long>(s + 1) * count);
    }

    check("gamma_norm(2) = sqrt(pi)",
          std::abs(gamma_norm(2.0) - std::sqrt(M_PI)) < 1e-10);
    check("gamma_norm(4/3) = Gamma(1/4)",
          std::abs(gamma_norm(4.0 / 3.0) - 3.6256099082219083) < 1e-8);
    check("inclusion_probability(100,1) = 0.01",
          std::abs(inclusion_probability(100, 1) - 0.01) < 1e-12);

    // DEWA-S unbiasedness at reduced replicates.
    {
        DayLocalCosts day{0, 2, 1, {0.5, 0.0}};
        const int reps = 20000;
        double acc = 0.0;
        for (int r = 0; r < reps; ++r)
            acc += dewa_s_estimate(day, 1, nullptr, TrialRng{11, r, 0})[0];
        check("dewa-s unbiased (mean within 6 sigma)",
              std::abs(acc / reps - 0.5) < 6.0 * std::sqrt(2.0 * 0.25 / reps) + 0.05);
    }

    // Ledger exactness for EWA.
    {
        ExperimentConfig cfg;
        cfg.n = 10;
        cfg.s = 5;
        cfg.T = 20;
        cfg.b_e = 10;
        cfg.protocol = "ewa";
        cfg.seed = 3;
        const auto trial = run_trial(cfg, 0);
        check("ewa ledger = T(ns+s) exactly",
              trial.ledger.total_words == cfg.T * (cfg.n * cfg.s + cfg.s));
    }

    // Determinism: identical config twice.
    {
        ExperimentConfig cfg;
        cfg.n = 8;
        cfg.s = 4;
        cfg.T = 50;
        cfg.b_e = 2;
        cfg.protocol = "dewa-s";
        cfg.seed = 99;
        const auto a = run_trial(cfg, 0);
        const auto b = run_trial(cfg, 0);
        check("identical seed gives identical run",
              a.regret.avg_regret_series == b.regret.avg_regret_series &&
                  a.ledger.total_words == b.ledger.total_words &&
                  a.selections == b.selections);
    }

    std::cout << (failures == 0 ? "selftest: all checks passed\n"
                                : "selftest: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed experts protocol simulator"};
    app.require_subcommand(1);

    CliFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "run one experiment configuration");
    add_experiment_flags(run_cmd, run_flags);

    CliFlags sweep_flags;
    std::string vary;
    std::vector<std::string> values;
    auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per value of a field");
    add_experiment_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--vary", vary, "field to vary: be, eta, T, protocol")->required();
    sweep_cmd->add_option("--values", values, "values for the varied field")
        ->required()
        ->delimiter(',');

    double dd_R = 0.2212;
    int dd_n = 50, dd_s = 10, dd_trials = 30;
    long long dd_T = 5000;
    std::string dd_oracle = "ewa";
    std::uint64_t dd_seed = 0;
    auto* dd_cmd = app.add_subcommand("diffdist", "distribution-testing reduction experiment");
    dd_cmd->add_option("--R", dd_R, "oracle regret target R");
    dd_cmd->add_option("--n", dd_n, "expert count");
    dd_cmd->add_option("--T", dd_T, "horizon");
    dd_cmd->add_option("--s", dd_s, "server count");
    dd_cmd->add_option("--oracle", dd_oracle, "oracle protocol id");
    dd_cmd->add_option("--trials", dd_trials, "balanced trial count");
    dd_cmd->add_option("--seed", dd_seed, "base seed");

    auto* selftest_cmd = app.add_subcommand("selftest", "fast invariant suite");

    try {
        auto args = expand_config(argc, argv);
        // CLI11's vector overload wants the arguments reversed, program name
        // stripped
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return do_run(run_flags);
        if (sweep_cmd->parsed()) return do_sweep(sweep_flags, vary, values);
        if (dd_cmd->parsed())
            return do_diffdist(dd_R, dd_n, dd_T, dd_s, dd_oracle, dd_trials, dd_seed);
        if (selftest_cmd->parsed()) return do_selftest();
    } catch (const dexperts::SimError& e) {
        std::cerr << e.what() << '\n';
        return e.code() == "PreconditionViolated" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 2;
}
