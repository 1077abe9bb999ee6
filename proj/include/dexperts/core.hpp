#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dexperts/rng.hpp"

namespace dexperts {

using ExpertId = int;
using ServerId = int;

// Runtime failures inside a simulation (model misuse, memory-bound breach,
// exhausted traces). Configuration problems are reported by validate_config
// instead, as a list of messages.
class SimError : public std::runtime_error {
public:
    SimError(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

enum class Aggregation { Sum, PowerOfSum, Max, Lp };

struct AggregationSpec {
    Aggregation kind = Aggregation::Sum;
    int q = 1;       // PowerOfSum exponent, integer >= 1
    double p = 2.0;  // Lp exponent, > 1
};

enum class CommModel { MessagePassing, Broadcast };

enum class StreamKind { Gaussian, Bernoulli, DiffDist, Trace, AdaptiveGreedy };

struct StreamSpec {
    StreamKind kind = StreamKind::Gaussian;
    bool sparse = false;        // wrap the base kind: one holding server per expert per day
    ExpertId best_expert = 0;   // expert drawing from the favourable distribution
    double gaussian_best_mu = 0.2;
    double gaussian_other_mu = 0.6;
    double bernoulli_best_p = 0.25;
    double bernoulli_other_p = 0.5;
    char diffdist_case = 'A';   // 'A' or 'B'
    double diffdist_eps = 0.1;  // in (0, 1/2)
    int diffdist_target = 0;    // the biased coordinate i* in case B
    std::string trace_path;
};

// The n x s matrix of per-expert per-server costs for one day, row-major.
struct DayLocalCosts {
    int day = 0;
    int n = 0;
    int s = 0;
    std::vector<double> costs;  // costs[i * s + j]

    double at(ExpertId i, ServerId j) const { return costs[static_cast<std::size_t>(i) * s + j]; }
    double& at(ExpertId i, ServerId j) { return costs[static_cast<std::size_t>(i) * s + j]; }
};

struct ExperimentConfig {
    int n = 100;
    int s = 50;
    long long T = 10000;
    int b_e = 1;
    int b_s = 2;           // server budget for b-dewa-s
    double eta = 0.1;
    double eta_meta = -1;  // <= 0 means auto: sqrt(log K / T)
    int K = 0;             // 0 means auto: ceil(2 log10 T)
    int k_probe = 0;       // 0 means auto: ceil(log s), for b-dewa-m
    double exp3_gamma = -1;  // <= 0 means auto: min(1, sqrt(n log n / T))
    bool unbias_max = false;  // rescale dewa-m estimates by 1/inclusion
    AggregationSpec aggregation;
    CommModel comm_model = CommModel::MessagePassing;
    std::string protocol = "ewa";
    StreamSpec stream;
    std::uint64_t seed = 0;
    int trials = 1;
    double p = 2.0;        // mirrors aggregation.p for Lp runs
    double epsilon = 0.5;  // analysis constant for dewa-l, needs 1 + epsilon < p
};

// Known protocol identifiers (External Interfaces).
bool known_protocol(const std::string& id);
bool is_meta_protocol(const std::string& id);     // "-p" suffix
std::string base_protocol(const std::string& id);  // strips the "-p" suffix

// Returns an empty list when every invariant holds; otherwise one message per
// violated invariant, each prefixed with its error code.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

}  // namespace dexperts
