#include "dexperts/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "dexperts/aggregation.hpp"
#include "dexperts/costgen.hpp"
#include "dexperts/meta.hpp"
#include "dexperts/protocols.hpp"

namespace dexperts {

namespace {

int worker_count() {
#ifdef _OPENMP
    int threads = omp_get_max_threads();
#else
    int threads = 1;
#endif
    if (const char* env = std::getenv("DEXPERTS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) threads = std::min(threads, cap);
    }
    return threads;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial,
                      std::vector<CommEvent>* transcript) {
    CostStream stream(cfg.stream, cfg.aggregation, cfg.n, cfg.s);
    if (cfg.stream.kind == StreamKind::Trace)
        stream.attach_trace(load_trace(cfg.stream.trace_path, cfg.aggregation));

    auto protocol = make_protocol(cfg);
    const TrialRng rng{cfg.seed, trial, 0};

    TrialResult result;
    result.seed = cfg.seed;
    result.trial = trial;
    result.ledger.per_day.assign(static_cast<std::size_t>(cfg.T), 0);
    result.regret.cum_expert_cost.assign(static_cast<std::size_t>(cfg.n), 0.0);
    result.regret.avg_regret_series.reserve(static_cast<std::size_t>(cfg.T));
    result.selections.reserve(static_cast<std::size_t>(cfg.T));

    std::vector<ServerScratch> servers(static_cast<std::size_t>(cfg.s));

    for (int t = 0; t < cfg.T; ++t) {
        // (1) commit, (2) adversary, (3) pick and incur, (4) communicate.
        const auto p = protocol->begin_day(t, rng);
        const AdversaryContext ctx{t, p};
        const DayLocalCosts day = stream.next_day(ctx, cfg.seed, trial, t);

        const ExpertId pick = protocol->select_expert(p, t, rng);
        result.selections.push_back(pick);

        // Omniscient regret bookkeeping; never charged to the ledger.
        const auto truth = true_costs(day, cfg.aggregation);
        result.regret.cum_alg_cost += truth[static_cast<std::size_t>(pick)];
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < cfg.n; ++i) {
            result.regret.cum_expert_cost[static_cast<std::size_t>(i)] +=
                truth[static_cast<std::size_t>(i)];
            best = std::min(best, result.regret.cum_expert_cost[static_cast<std::size_t>(i)]);
        }
        result.regret.avg_regret_series.push_back((result.regret.cum_alg_cost - best) /
                                                  (t + 1));

        DaySession session(cfg.comm_model, t, result.ledger, servers, transcript);
        protocol->execute_day(day, session, rng, pick);
        session.end_day();
        assert_memoryless(servers);
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool parallel) {
    ExperimentResult result;
    result.trials.resize(static_cast<std::size_t>(cfg.trials));

    if (parallel) {
        const int threads = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int t = 0; t < cfg.trials; ++t)
            result.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t);
    } else {
        for (int t = 0; t < cfg.trials; ++t)
            result.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t);
    }

    // Deterministic serial fold, ordered by trial index.
    result.mean_avg_regret.assign(static_cast<std::size_t>(cfg.T), 0.0);
    result.stderr_avg_regret.assign(static_cast<std::size_t>(cfg.T), 0.0);
    for (const auto& trial : result.trials) {
        result.merged_ledger.merge(trial.ledger);
        for (long long t = 0; t < cfg.T; ++t)
            result.mean_avg_regret[static_cast<std::size_t>(t)] +=
                trial.regret.avg_regret_series[static_cast<std::size_t>(t)];
    }
    for (long long t = 0; t < cfg.T; ++t)
        result.mean_avg_regret[static_cast<std::size_t>(t)] /= cfg.trials;
    if (cfg.trials > 1) {
        for (const auto& trial : result.trials)
            for (long long t = 0; t < cfg.T; ++t) {
                const double d = trial.regret.avg_regret_series[static_cast<std::size_t>(t)] -
                                 result.mean_avg_regret[static_cast<std::size_t>(t)];
                result.stderr_avg_regret[static_cast<std::size_t>(t)] += d * d;
            }
        for (long long t = 0; t < cfg.T; ++t)
            result.stderr_avg_regret[static_cast<std::size_t>(t)] =
                std::sqrt(result.stderr_avg_regret[static_cast<std::size_t>(t)] /
                          (cfg.trials - 1)) /
                std::sqrt(static_cast<double>(cfg.trials));
    }
    result.mean_total_words =
        static_cast<double>(result.merged_ledger.total_words) / cfg.trials;
    const double ewa_words = static_cast<double>(cfg.T) *
                             (static_cast<double>(cfg.n) * cfg.s + cfg.s);
    result.ewa_ratio = result.mean_total_words / ewa_words;
    return result;
}

DiffDistResult run_diffdist(double R, int n, long long T, int s, const std::string& oracle,
                            int trials, std::uint64_t seed) {
    DiffDistResult result;
    result.c = std::sqrt(2.0 * std::log(24.0));
    if (T * R * R < 1.0)
        throw SimError("PreconditionViolated", "the reduction needs T * R^2 >= 1");
    // The printed constants give eps = R(c+1) which can reach 1/2; the bias
    // is clamped to keep Bernoulli(1/2 - eps) a distribution.
    result.eps = std::min(R * (result.c + 1.0), 0.499);
    const double threshold = (1.0 - R * result.c) / 2.0;

    result.outcomes.resize(static_cast<std::size_t>(trials));
    const int threads = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int trial = 0; trial < trials; ++trial) {
        const bool case_a = trial % 2 == 0;  // balanced by construction
        ExperimentConfig cfg;
        cfg.n = n;
        cfg.s = s;
        cfg.T = T;
        cfg.b_e = n;
        cfg.eta = std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(T));
        cfg.aggregation = {Aggregation::Sum, 1, 2.0};
        cfg.comm_model = CommModel::MessagePassing;
        cfg.protocol = oracle;
        cfg.seed = seed;
        cfg.stream.kind = StreamKind::DiffDist;
        cfg.stream.diffdist_case = case_a ? 'A' : 'B';
        cfg.stream.diffdist_eps = result.eps;
        RngStream target_rng = derive_stream(seed, static_cast<std::uint64_t>(trial), 0,
                                             Role::DiffDist, 0);
        cfg.stream.diffdist_target =
            static_cast<int>(target_rng.below(static_cast<std::uint64_t>(n)));
        if (base_protocol(oracle) == "dewa-m" || base_protocol(oracle) == "dewa-l" ||
            base_protocol(oracle) == "b-dewa-m")
            cfg.comm_model = CommModel::Broadcast;

        const TrialResult run = run_trial(cfg, trial);
        DiffDistOutcome& out = result.outcomes[static_cast<std::size_t>(trial)];
        out.C_hat = run.regret.cum_alg_cost / static_cast<double>(T);
        out.threshold = threshold;
        out.truth_case_a = case_a;
        out.verdict_case_a = out.C_hat > threshold;
    }
    int correct = 0;
    for (const auto& out : result.outcomes)
        if (out.verdict_case_a == out.truth_case_a) ++correct;
    result.accuracy = static_cast<double>(correct) / trials;
    return result;
}

void persist_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                     const std::string& out_dir) {
    if (result.trials.empty())
        throw SimError("NothingToPersist", "experiment holds zero trials");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream csv(fs::path(out_dir) / "regret.csv", std::ios::binary);
        if (!csv) throw SimError("IoError", "cannot write " + out_dir + "/regret.csv");
        csv << "t,mean_avg_regret,stderr\n";
        for (std::size_t t = 0; t < result.mean_avg_regret.size(); ++t)
            csv << (t + 1) << ',' << format_double(result.mean_avg_regret[t]) << ','
                << format_double(result.stderr_avg_regret[t]) << '\n';
    }
    {
        nlohmann::json comm;
        comm["total_words"] = result.merged_ledger.total_words;
        comm["mean_total_words"] = result.mean_total_words;
        comm["ewa_ratio"] = result.ewa_ratio;
        comm["per_kind"] = {
            {"channel_init", result.merged_ledger.kind_total(EventKind::ChannelInit)},
            {"server_turn", result.merged_ledger.kind_total(EventKind::ServerTurn)},
            {"payload", result.merged_ledger.kind_total(EventKind::Payload)}};
        std::ofstream out(fs::path(out_dir) / "comm.json", std::ios::binary);
        if (!out) throw SimError("IoError", "cannot write " + out_dir + "/comm.json");
        out << comm.dump(2) << '\n';
    }
    {
        nlohmann::json echo;
        echo["n"] = cfg.n;
        echo["s"] = cfg.s;
        echo["T"] = cfg.T;
        echo["b_e"] = cfg.b_e;
        echo["b_s"] = cfg.b_s;
        echo["eta"] = cfg.eta;
        const int K = cfg.K > 0 ? cfg.K : default_K(cfg.T);
        echo["K"] = K;
        echo["eta_meta"] = cfg.eta_meta > 0 ? cfg.eta_meta : default_eta_meta(K, cfg.T);
        echo["k_probe"] = cfg.k_probe > 0
                              ? cfg.k_probe
                              : std::max(1, static_cast<int>(std::ceil(
                                                std::log(static_cast<double>(cfg.s)))));
        echo["unbias_max"] = cfg.unbias_max;
        echo["protocol"] = cfg.protocol;
        echo["comm_model"] =
            cfg.comm_model == CommModel::MessagePassing ? "mp" : "bc";
        switch (cfg.aggregation.kind) {
            case Aggregation::Sum: echo["aggregation"] = "sum"; break;
            case Aggregation::PowerOfSum:
                echo["aggregation"] = "pow:" + std::to_string(cfg.aggregation.q);
                break;
            case Aggregation::Max: echo["aggregation"] = "max"; break;
            case Aggregation::Lp:
                echo["aggregation"] = "lp:" + format_double(cfg.aggregation.p);
                break;
        }
        switch (cfg.stream.kind) {
            case StreamKind::Gaussian: echo["dist"] = "gaussian"; break;
            case StreamKind::Bernoulli: echo["dist"] = "bernoulli"; break;
            case StreamKind::DiffDist: echo["dist"] = "diffdist"; break;
            case StreamKind::AdaptiveGreedy: echo["dist"] = "adaptive"; break;
            case StreamKind::Trace: echo["dist"] = "trace:" + cfg.stream.trace_path; break;
        }
        echo["sparse"] = cfg.stream.sparse;
        echo["seed"] = cfg.seed;
        echo["trials"] = cfg.trials;
        echo["epsilon"] = cfg.epsilon;
        std::ofstream out(fs::path(out_dir) / "config.json", std::ios::binary);
        if (!out) throw SimError("IoError", "cannot write " + out_dir + "/config.json");
        out << echo.dump(2) << '\n';
    }
}

}  // namespace dexperts
