#pragma once

#include <span>
#include <vector>

#include "dexperts/core.hpp"

namespace dexperts {

// f(row): Sum, (Sum)^q, Max, or the l_p norm. All entries must be >= 0.
double aggregate(const AggregationSpec& spec, std::span<const double> row);

// Gamma(1 - 1/p) = E[E^{-1/p}] for E ~ Exponential(1). Requires p > 1.
double gamma_norm(double p);

// 1 - (1 - 1/n)^{b_e}: probability an expert lands in B_e under b_e
// independent uniform draws with replacement.
double inclusion_probability(int n, int b_e);

// True aggregated cost per expert for one day (omniscient regret tracking).
std::vector<double> true_costs(const DayLocalCosts& day, const AggregationSpec& agg);

}  // namespace dexperts
