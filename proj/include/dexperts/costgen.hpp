#pragma once

#include <string>
#include <vector>

#include "dexperts/aggregation.hpp"
#include "dexperts/core.hpp"

namespace dexperts {

// What the adversary gets to see before choosing the day's costs: the
// distribution the coordinator committed to. Oblivious streams ignore it.
struct AdversaryContext {
    int day = 0;
    std::vector<double> committed_distribution;
};

struct TraceData {
    long long T = 0;
    int n = 0;
    int s = 0;
    std::vector<double> tensor;  // [t * n * s + i * s + j]
};

// Loads the "t,i,j,cost" interchange format (one header line, UTF-8, '\n'
// endings, '.' decimals). Entries are min-max normalized globally per file,
// then rescaled once so no per-day aggregated cost exceeds 1 under agg.
TraceData load_trace(const std::string& path, const AggregationSpec& agg);

class CostStream {
public:
    CostStream(StreamSpec spec, AggregationSpec agg, int n, int s);

    // Produces the day's n x s cost matrix. Draws come only from the derived
    // (seed, trial, day, Role::Generator) stream, so oblivious streams are a
    // function of (seed, trial, day) alone.
    DayLocalCosts next_day(const AdversaryContext& ctx, std::uint64_t seed, int trial,
                           int day) const;

    void attach_trace(TraceData trace) { trace_ = std::move(trace); }
    const StreamSpec& spec() const { return spec_; }

private:
    DayLocalCosts dense_day(int day, RngStream& rng) const;
    DayLocalCosts sparse_day(int day, RngStream& rng) const;
    DayLocalCosts diffdist_day(int day, RngStream& rng) const;
    DayLocalCosts adaptive_day(const AdversaryContext& ctx, int day) const;
    double draw_base_cost(ExpertId i, RngStream& rng) const;

    StreamSpec spec_;
    AggregationSpec agg_;
    int n_;
    int s_;
    TraceData trace_;
};

}  // namespace dexperts
