#include "dexperts/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace dexperts {

double aggregate(const AggregationSpec& spec, std::span<const double> row) {
    for (double v : row)
        if (v < 0.0) throw SimError("NegativeCost", "aggregation input has a negative entry");

    switch (spec.kind) {
        case Aggregation::Sum: {
            double sum = 0.0;
            for (double v : row) sum += v;
            return sum;
        }
        case Aggregation::PowerOfSum: {
            double sum = 0.0;
            for (double v : row) sum += v;
            return std::pow(sum, spec.q);
        }
        case Aggregation::Max: {
            double mx = 0.0;
            for (double v : row) mx = std::max(mx, v);
            return mx;
        }
        case Aggregation::Lp: {
            double acc = 0.0;
            for (double v : row) acc += std::pow(v, spec.p);
            return std::pow(acc, 1.0 / spec.p);
        }
    }
    return 0.0;
}

double gamma_norm(double p) {
    if (p <= 1.0) throw SimError("BadExponent", "gamma_norm requires p > 1");
    return std::tgamma(1.0 - 1.0 / p);
}

double inclusion_probability(int n, int b_e) {
    return 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(n), b_e);
}

std::vector<double> true_costs(const DayLocalCosts& day, const AggregationSpec& agg) {
    std::vector<double> out(static_cast<std::size_t>(day.n));
    for (int i = 0; i < day.n; ++i) {
        std::span<const double> row(day.costs.data() + static_cast<std::size_t>(i) * day.s,
                                    static_cast<std::size_t>(day.s));
        out[static_cast<std::size_t>(i)] = aggregate(agg, row);
    }
    return out;
}

}  // namespace dexperts
