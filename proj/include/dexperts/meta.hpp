#pragma once

#include <memory>
#include <vector>

#include "dexperts/protocols.hpp"

namespace dexperts {

// K = ceil(2 log10 T): per-child failure rate 1/10, overall 1/T^2.
int default_K(long long T);

// eta_meta = sqrt(log K / T), the EWA rate applied to K meta-experts.
double default_eta_meta(int K, long long T);

// EWA over K independent copies of a base protocol. The committed
// distribution is the p(k)-mixture of the children's distributions; the
// realized pick samples k then i ~ p_k. Each child's selected expert has its
// true aggregated cost queried from all s servers (charged per child).
class MetaProtocol : public Protocol {
public:
    MetaProtocol(std::vector<std::unique_ptr<Protocol>> children, double eta_meta,
                 AggregationSpec agg);

    std::vector<double> begin_day(int day, const TrialRng& rng) override;
    ExpertId select_expert(const std::vector<double>& p, int day, const TrialRng& rng) override;
    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId selected) override;

    int children_count() const { return static_cast<int>(children_.size()); }
    const std::vector<double>& meta_losses() const { return L_meta_; }

private:
    std::vector<std::unique_ptr<Protocol>> children_;
    std::vector<std::vector<double>> child_distributions_;
    std::vector<double> L_meta_;
    double eta_meta_;
    AggregationSpec agg_;
};

}  // namespace dexperts
