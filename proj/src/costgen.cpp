#include "dexperts/costgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dexperts {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

bool divides_by_s(const AggregationSpec& agg) {
    return agg.kind == Aggregation::Sum || agg.kind == Aggregation::PowerOfSum;
}

}  // namespace

TraceData load_trace(const std::string& path, const AggregationSpec& agg) {
    std::ifstream in(path);
    if (!in) throw SimError("ParseError", "cannot open trace file '" + path + "'");

    std::string line;
    long long lineno = 0;
    if (!std::getline(in, line)) throw SimError("ParseError", "line 1: missing header");
    ++lineno;

    struct Entry {
        long long t;
        int i, j;
        double cost;
    };
    std::vector<Entry> entries;
    long long max_t = -1;
    int max_i = -1, max_j = -1;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        Entry e{};
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ls >> e.t >> c1 >> e.i >> c2 >> e.j >> c3 >> e.cost) || c1 != ',' || c2 != ',' ||
            c3 != ',')
            throw SimError("ParseError",
                           "line " + std::to_string(lineno) + ": expected 't,i,j,cost'");
        std::string rest;
        if (ls >> rest)
            throw SimError("ParseError", "line " + std::to_string(lineno) + ": trailing fields");
        if (e.t < 0 || e.i < 0 || e.j < 0)
            throw SimError("ParseError", "line " + std::to_string(lineno) + ": negative index");
        if (e.cost < 0.0)
            throw SimError("ParseError", "line " + std::to_string(lineno) + ": negative cost");
        max_t = std::max(max_t, e.t);
        max_i = std::max(max_i, e.i);
        max_j = std::max(max_j, e.j);
        entries.push_back(e);
    }
    if (entries.empty()) throw SimError("ShapeError", "trace holds no data rows");

    TraceData data;
    data.T = max_t + 1;
    data.n = max_i + 1;
    data.s = max_j + 1;
    const std::size_t expected =
        static_cast<std::size_t>(data.T) * data.n * data.s;
    if (entries.size() != expected)
        throw SimError("ShapeError", "trace is not a complete (day, expert, server) grid: got " +
                                         std::to_string(entries.size()) + " rows, expected " +
                                         std::to_string(expected));

    data.tensor.assign(expected, std::numeric_limits<double>::quiet_NaN());
    for (const auto& e : entries) {
        std::size_t idx = (static_cast<std::size_t>(e.t) * data.n + e.i) * data.s + e.j;
        if (!std::isnan(data.tensor[idx]))
            throw SimError("ShapeError", "duplicate (t,i,j) triple in trace");
        data.tensor[idx] = e.cost;
    }
    for (double v : data.tensor)
        if (std::isnan(v)) throw SimError("ShapeError", "trace grid has a hole");

    // Global min-max normalization, then one rescale so no per-day aggregated
    // cost exceeds 1 under agg.
    double lo = data.tensor[0], hi = data.tensor[0];
    for (double v : data.tensor) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo)
        for (double& v : data.tensor) v = (v - lo) / (hi - lo);
    else if (hi > 1.0)
        for (double& v : data.tensor) v = 1.0;

    double worst = 0.0;
    for (long long t = 0; t < data.T; ++t)
        for (int i = 0; i < data.n; ++i) {
            std::span<const double> row(
                data.tensor.data() + (static_cast<std::size_t>(t) * data.n + i) * data.s,
                static_cast<std::size_t>(data.s));
            worst = std::max(worst, aggregate(agg, row));
        }
    if (worst > 1.0) {
        const double scale = agg.kind == Aggregation::PowerOfSum
                                 ? std::pow(worst, 1.0 / agg.q)
                                 : worst;
        for (double& v : data.tensor) v /= scale;
    }
    return data;
}

CostStream::CostStream(StreamSpec spec, AggregationSpec agg, int n, int s)
    : spec_(std::move(spec)), agg_(agg), n_(n), s_(s) {}

double CostStream::draw_base_cost(ExpertId i, RngStream& rng) const {
    if (spec_.kind == StreamKind::Gaussian) {
        const double mu =
            i == spec_.best_expert ? spec_.gaussian_best_mu : spec_.gaussian_other_mu;
        return clamp01(rng.normal(mu, 1.0));
    }
    const double p = i == spec_.best_expert ? spec_.bernoulli_best_p : spec_.bernoulli_other_p;
    return rng.bernoulli(p) ? 1.0 : 0.0;
}

DayLocalCosts CostStream::dense_day(int day, RngStream& rng) const {
    DayLocalCosts out{day, n_, s_, std::vector<double>(static_cast<std::size_t>(n_) * s_)};
    const double scale = divides_by_s(agg_) ? 1.0 / s_ : 1.0;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < s_; ++j) out.at(i, j) = draw_base_cost(i, rng) * scale;
    return out;
}

DayLocalCosts CostStream::sparse_day(int day, RngStream& rng) const {
    // One holding server per expert, re-drawn each day; the single cost is
    // already in [0, 1], so no /s division.
    DayLocalCosts out{day, n_, s_, std::vector<double>(static_cast<std::size_t>(n_) * s_, 0.0)};
    for (int i = 0; i < n_; ++i) {
        const double cost = draw_base_cost(i, rng);
        const auto holder = static_cast<ServerId>(rng.below(static_cast<std::uint64_t>(s_)));
        out.at(i, holder) = cost;
    }
    return out;
}

DayLocalCosts CostStream::diffdist_day(int day, RngStream& rng) const {
    DayLocalCosts out{day, n_, s_, std::vector<double>(static_cast<std::size_t>(n_) * s_, 0.0)};
    const auto holder = static_cast<ServerId>(rng.below(static_cast<std::uint64_t>(s_)));
    for (int i = 0; i < n_; ++i) {
        const double p = (spec_.diffdist_case == 'B' && i == spec_.diffdist_target)
                             ? 0.5 - spec_.diffdist_eps
                             : 0.5;
        out.at(i, holder) = rng.bernoulli(p) ? 1.0 : 0.0;
    }
    return out;
}

DayLocalCosts CostStream::adaptive_day(const AdversaryContext& ctx, int day) const {
    const auto& p = ctx.committed_distribution;
    ExpertId target = 0;
    for (ExpertId i = 1; i < n_; ++i)
        if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(target)]) target = i;

    double share = 1.0;
    switch (agg_.kind) {
        case Aggregation::Sum: share = 1.0 / s_; break;
        case Aggregation::PowerOfSum: share = 1.0 / s_; break;
        case Aggregation::Max: share = 1.0; break;
        case Aggregation::Lp: share = std::pow(static_cast<double>(s_), -1.0 / agg_.p); break;
    }
    DayLocalCosts out{day, n_, s_, std::vector<double>(static_cast<std::size_t>(n_) * s_, 0.0)};
    for (int j = 0; j < s_; ++j) out.at(target, j) = share;
    return out;
}

DayLocalCosts CostStream::next_day(const AdversaryContext& ctx, std::uint64_t seed, int trial,
                                   int day) const {
    RngStream rng = derive_stream(seed, static_cast<std::uint64_t>(trial),
                                  static_cast<std::uint64_t>(day), Role::Generator, 0);
    DayLocalCosts out;
    switch (spec_.kind) {
        case StreamKind::Gaussian:
        case StreamKind::Bernoulli:
            out = spec_.sparse ? sparse_day(day, rng) : dense_day(day, rng);
            break;
        case StreamKind::DiffDist:
            out = diffdist_day(day, rng);
            break;
        case StreamKind::AdaptiveGreedy:
            out = adaptive_day(ctx, day);
            break;
        case StreamKind::Trace: {
            if (day >= trace_.T)
                throw SimError("TraceExhausted", "day " + std::to_string(day) +
                                                     " beyond trace horizon " +
                                                     std::to_string(trace_.T));
            out.day = day;
            out.n = trace_.n;
            out.s = trace_.s;
            const std::size_t stride = static_cast<std::size_t>(trace_.n) * trace_.s;
            out.costs.assign(trace_.tensor.begin() + static_cast<std::size_t>(day) * stride,
                             trace_.tensor.begin() + (static_cast<std::size_t>(day) + 1) * stride);
            break;
        }
    }
    // Dense clamped costs can still break the [0, 1] aggregate under Lp.
    if (agg_.kind == Aggregation::Lp && !spec_.sparse && spec_.kind != StreamKind::Trace) {
        for (double v : true_costs(out, agg_))
            if (v > 1.0 + 1e-9)
                throw SimError("NormalizationViolation",
                               "aggregated cost exceeds 1 under Lp aggregation");
    }
    return out;
}

}  // namespace dexperts
