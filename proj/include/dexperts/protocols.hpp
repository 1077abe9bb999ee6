#pragma once

#include <memory>
#include <vector>

#include "dexperts/core.hpp"
#include "dexperts/costgen.hpp"
#include "dexperts/netsim.hpp"
#include "dexperts/rng.hpp"

namespace dexperts {

// All random draws of one trial hang off this: (seed, trial) fixed, streams
// derived per (day, role, entity). Meta children shift the entity space so
// their draws never collide with the base protocol's.
struct TrialRng {
    std::uint64_t seed = 0;
    int trial = 0;
    int child = 0;

    RngStream stream(int day, Role role, std::uint64_t entity = 0) const {
        return derive_stream(seed, static_cast<std::uint64_t>(trial),
                             static_cast<std::uint64_t>(day), role,
                             entity + static_cast<std::uint64_t>(child) * 0x100000ULL);
    }
};

struct WeightState {
    std::vector<double> L_hat;  // cumulative estimated losses
    double eta = 0.1;
};

// p_i proportional to exp(-eta * L_hat_i), min-shifted so the largest
// exponent is 0 and the vector never underflows to all zeros.
std::vector<double> ewa_distribution(const WeightState& state);

// Inverse-CDF sample over expert index order (deterministic tie-breaking).
int sample_index(const std::vector<double>& p, RngStream& rng);

// --- Per-day estimators -----------------------------------------------------
// Each runs one day's communication schedule. Passing session = nullptr runs
// the same draws without accounting (used by the Monte Carlo oracles).

// alpha ~ Bern(b_e/n), beta ~ Bern(l_ij); l_hat_i = (n/b_e) * sum_j alpha*beta.
std::vector<double> dewa_s_estimate(const DayLocalCosts& day, int b_e, DaySession* session,
                                    const TrialRng& rng);

// PowerOfSum q=2: two independent (alpha, beta) panels, cross product of the
// two per-panel sums; unbiased for (sum_j l_ij)^2.
std::vector<double> dewa_s_pow2_estimate(const DayLocalCosts& day, int b_e, DaySession* session,
                                         const TrialRng& rng);

// Running-max sweep in the given server visit order; exact max for sampled
// experts, 0 otherwise. Broadcast model only when charged.
std::vector<double> dewa_m_estimate(const DayLocalCosts& day, const std::vector<bool>& sampled,
                                    const std::vector<ServerId>& visit_order, DaySession* session);

// l_p embedding: per-server E_j ~ Exp(1), running max of l_ij^p / E_j, then
// the inclusion / Gamma(1 - 1/p) normalization.
std::vector<double> dewa_l_estimate(const DayLocalCosts& day, const std::vector<bool>& sampled,
                                    double p, int n, int b_e,
                                    const std::vector<ServerId>& visit_order, DaySession* session,
                                    const TrialRng& rng);

// Uniform-server baseline: alpha ~ Bern(b_e/n), beta ~ Bern(b_s/s),
// l_hat_i = (n s / (b_e b_s)) * sum_j alpha * beta * l_ij.
std::vector<double> b_dewa_s_estimate(const DayLocalCosts& day, int b_e, int b_s,
                                      DaySession* session, const TrialRng& rng);

// Probe k_probe servers without replacement per sampled expert, take the max.
std::vector<double> b_dewa_m_estimate(const DayLocalCosts& day,
                                      const std::vector<ExpertId>& sampled_distinct, int k_probe,
                                      DaySession* session, const TrialRng& rng);

// b_e independent uniform draws with replacement.
std::vector<ExpertId> sample_expert_set(int n, int b_e, RngStream& rng);
std::vector<ServerId> random_permutation(int s, RngStream& rng);

// --- Protocols ---------------------------------------------------------------

class Protocol {
public:
    virtual ~Protocol() = default;

    // Step (1) of the day loop: commit a distribution over experts.
    virtual std::vector<double> begin_day(int day, const TrialRng& rng) = 0;

    // Step (3): realized pick from the committed distribution.
    virtual ExpertId select_expert(const std::vector<double>& p, int day, const TrialRng& rng);

    // Step (4): the protocol's communication schedule and state update.
    // selected is the day's realized pick (used by exp3's estimator).
    virtual void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                             ExpertId selected) = 0;
};

// Builds the protocol named by cfg.protocol, wrapping "-p" identifiers in the
// meta-expert layer. cfg must already be validated.
std::unique_ptr<Protocol> make_protocol(const ExperimentConfig& cfg);

}  // namespace dexperts
