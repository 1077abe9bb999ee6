#pragma once

#include <string>
#include <vector>

#include "dexperts/core.hpp"
#include "dexperts/netsim.hpp"

namespace dexperts {

struct RegretRecord {
    double cum_alg_cost = 0.0;
    std::vector<double> cum_expert_cost;  // per-expert true cumulative cost
    std::vector<double> avg_regret_series;
};

struct TrialResult {
    RegretRecord regret;
    CommLedger ledger;
    std::vector<ExpertId> selections;
    std::uint64_t seed = 0;
    int trial = 0;
};

struct ExperimentResult {
    std::vector<double> mean_avg_regret;
    std::vector<double> stderr_avg_regret;
    double mean_total_words = 0.0;
    double ewa_ratio = 0.0;  // mean total / (T * (n*s + s))
    CommLedger merged_ledger;
    std::vector<TrialResult> trials;
};

// One seeded trial of the strong-adversary day loop: commit p_t, adversary
// produces costs, realized pick incurs its true cost, protocol communicates
// and updates, server scratch asserted empty. Regret reads true costs through
// an uncharged side door.
TrialResult run_trial(const ExperimentConfig& cfg, int trial,
                      std::vector<CommEvent>* transcript = nullptr);

// Trials on disjoint sub-streams; parallel = false keeps the serial reference
// path (both produce identical results, the fold is ordered by trial index).
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool parallel = true);

struct DiffDistOutcome {
    double C_hat = 0.0;
    double threshold = 0.0;
    bool truth_case_a = false;
    bool verdict_case_a = false;  // C_hat > threshold
};

struct DiffDistResult {
    double accuracy = 0.0;
    double c = 0.0;    // sqrt(2 ln 24)
    double eps = 0.0;  // R(c+1), clamped below 1/2 (see README)
    std::vector<DiffDistOutcome> outcomes;
};

// The regret-to-distinguishing reduction: balanced case A/B trials, oracle
// protocol run on the induced stream, classification by C_hat vs (1 - Rc)/2.
DiffDistResult run_diffdist(double R, int n, long long T, int s, const std::string& oracle,
                            int trials, std::uint64_t seed);

// Writes regret.csv, comm.json, config.json under out_dir. Deterministic
// byte-for-byte given identical inputs.
void persist_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                     const std::string& out_dir);

}  // namespace dexperts
