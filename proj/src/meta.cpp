#include "dexperts/meta.hpp"

#include <cmath>

#include "dexperts/aggregation.hpp"

namespace dexperts {

int default_K(long long T) {
    return std::max(1, static_cast<int>(std::ceil(2.0 * std::log10(static_cast<double>(T)))));
}

double default_eta_meta(int K, long long T) {
    if (K < 2) return 1.0;  // degenerate wrapper, the rate is irrelevant
    return std::sqrt(std::log(static_cast<double>(K)) / static_cast<double>(T));
}

MetaProtocol::MetaProtocol(std::vector<std::unique_ptr<Protocol>> children, double eta_meta,
                           AggregationSpec agg)
    : children_(std::move(children)),
      L_meta_(children_.size(), 0.0),
      eta_meta_(eta_meta),
      agg_(agg) {}

std::vector<double> MetaProtocol::begin_day(int day, const TrialRng& rng) {
    const int K = children_count();
    child_distributions_.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        TrialRng child_rng = rng;
        child_rng.child = rng.child + k;
        child_distributions_[static_cast<std::size_t>(k)] =
            children_[static_cast<std::size_t>(k)]->begin_day(day, child_rng);
    }
    const auto w = ewa_distribution({L_meta_, eta_meta_});
    const std::size_t n = child_distributions_[0].size();
    std::vector<double> mixture(n, 0.0);
    for (int k = 0; k < K; ++k)
        for (std::size_t i = 0; i < n; ++i)
            mixture[i] += w[static_cast<std::size_t>(k)] *
                          child_distributions_[static_cast<std::size_t>(k)][i];
    return mixture;
}

ExpertId MetaProtocol::select_expert(const std::vector<double>&, int day, const TrialRng& rng) {
    // Sample k then i ~ p_k; same law as the mixture, and with K = 1 the
    // selection stream consumption matches the bare base protocol.
    const auto w = ewa_distribution({L_meta_, eta_meta_});
    RngStream meta_rng = rng.stream(day, Role::Meta, 0);
    const int k = sample_index(w, meta_rng);
    RngStream pick_rng = rng.stream(day, Role::Selection, 0);
    return sample_index(child_distributions_[static_cast<std::size_t>(k)], pick_rng);
}

void MetaProtocol::execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                               ExpertId) {
    const int K = children_count();
    for (int k = 0; k < K; ++k) {
        TrialRng child_rng = rng;
        child_rng.child = rng.child + k;
        RngStream pick_rng = child_rng.stream(day.day, Role::ChildSelection, 0);
        const ExpertId pick =
            sample_index(child_distributions_[static_cast<std::size_t>(k)], pick_rng);

        children_[static_cast<std::size_t>(k)]->execute_day(day, session, child_rng, pick);

        // Query the child's selected expert's true cost from every server.
        std::vector<double> row(static_cast<std::size_t>(day.s));
        for (int j = 0; j < day.s; ++j) {
            session.open_channel(j);
            session.send_private(j, 1);
            row[static_cast<std::size_t>(j)] = day.at(pick, j);
        }
        L_meta_[static_cast<std::size_t>(k)] += aggregate(agg_, row);
    }
}

}  // namespace dexperts
