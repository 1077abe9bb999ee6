#include "dexperts/core.hpp"

#include <algorithm>
#include <array>

namespace dexperts {

namespace {

constexpr std::array<const char*, 12> kProtocols = {
    "ewa",    "exp3",     "dewa-s", "dewa-s-p",   "dewa-m",   "dewa-m-p",
    "dewa-l", "dewa-l-p", "b-dewa-s", "b-dewa-s-p", "b-dewa-m", "b-dewa-m-p"};

bool broadcast_only(const std::string& base) {
    return base == "dewa-m" || base == "dewa-l" || base == "b-dewa-m";
}

}  // namespace

bool known_protocol(const std::string& id) {
    return std::find(kProtocols.begin(), kProtocols.end(), id) != kProtocols.end();
}

bool is_meta_protocol(const std::string& id) {
    return id.size() > 2 && id.compare(id.size() - 2, 2, "-p") == 0;
}

std::string base_protocol(const std::string& id) {
    return is_meta_protocol(id) ? id.substr(0, id.size() - 2) : id;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> errors;
    const std::string base = base_protocol(cfg.protocol);

    if (!known_protocol(cfg.protocol))
        errors.push_back("UnknownProtocol: '" + cfg.protocol + "' is not a protocol identifier");
    if (cfg.n < 1) errors.push_back("BadDimension: n must be >= 1");
    if (cfg.s < 1) errors.push_back("BadDimension: s must be >= 1");
    if (cfg.T < 1) errors.push_back("BadHorizon: T must be >= 1");
    if (cfg.b_e < 1 || cfg.b_e > cfg.n)
        errors.push_back("BudgetOutOfRange: b_e must lie in [1, n]");
    if (cfg.b_s < 1 || cfg.b_s > cfg.s)
        errors.push_back("BudgetOutOfRange: b_s must lie in [1, s]");
    if (cfg.eta <= 0) errors.push_back("BadLearningRate: eta must be > 0");
    if (cfg.trials < 1) errors.push_back("BadTrialCount: trials must be >= 1");

    if (cfg.aggregation.kind == Aggregation::Lp && cfg.aggregation.p <= 1.0)
        errors.push_back("BadExponent: Lp aggregation needs p > 1");
    if (cfg.aggregation.kind == Aggregation::PowerOfSum && cfg.aggregation.q < 1)
        errors.push_back("BadExponent: PowerOfSum aggregation needs integer q >= 1");

    if (broadcast_only(base) && cfg.comm_model == CommModel::MessagePassing)
        errors.push_back("IncompatibleModel: " + base +
                         " is a broadcast-model protocol and cannot run under MessagePassing");

    if (base == "dewa-l") {
        if (cfg.aggregation.kind != Aggregation::Lp)
            errors.push_back("IncompatibleAggregation: dewa-l requires Lp aggregation");
        else if (1.0 + cfg.epsilon >= cfg.aggregation.p)
            errors.push_back("BadExponent: dewa-l analysis needs 1 + epsilon < p");
        if (cfg.epsilon <= 0 || cfg.epsilon > 1)
            errors.push_back("BadExponent: epsilon must lie in (0, 1]");
    }
    if ((base == "dewa-m" || base == "b-dewa-m") && cfg.aggregation.kind != Aggregation::Max)
        errors.push_back("IncompatibleAggregation: " + base + " requires Max aggregation");
    if ((base == "dewa-s" || base == "b-dewa-s") &&
        cfg.aggregation.kind != Aggregation::Sum &&
        cfg.aggregation.kind != Aggregation::PowerOfSum)
        errors.push_back("IncompatibleAggregation: " + base +
                         " requires Sum or PowerOfSum aggregation");
    if (base == "dewa-s" && cfg.aggregation.kind == Aggregation::PowerOfSum &&
        cfg.aggregation.q != 1 && cfg.aggregation.q != 2)
        errors.push_back("BadExponent: dewa-s supports PowerOfSum only for q in {1, 2}");

    if (cfg.stream.kind == StreamKind::DiffDist) {
        if (cfg.stream.diffdist_eps <= 0 || cfg.stream.diffdist_eps >= 0.5)
            errors.push_back("BadExponent: diffdist eps must lie in (0, 1/2)");
        if (cfg.stream.sparse)
            errors.push_back("BadStream: Sparse wraps only Gaussian or Bernoulli streams");
    }
    if (cfg.stream.sparse && cfg.stream.kind != StreamKind::Gaussian &&
        cfg.stream.kind != StreamKind::Bernoulli)
        errors.push_back("BadStream: Sparse wraps only Gaussian or Bernoulli streams");
    if (cfg.stream.kind == StreamKind::Trace && cfg.stream.trace_path.empty())
        errors.push_back("BadStream: Trace stream needs a file path");
    if (cfg.stream.best_expert < 0 || cfg.stream.best_expert >= cfg.n)
        errors.push_back("BadStream: best_expert must lie in [0, n)");

    if (cfg.k_probe < 0 || cfg.k_probe > cfg.s)
        errors.push_back("BudgetOutOfRange: k_probe must lie in [0, s]");
    if (cfg.K < 0) errors.push_back("BadMetaCount: K must be >= 1 (0 = auto)");

    return errors;
}

}  // namespace dexperts
