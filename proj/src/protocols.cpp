#include "dexperts/protocols.hpp"

#include <algorithm>
#include <cmath>

#include "dexperts/aggregation.hpp"
#include "dexperts/meta.hpp"

namespace dexperts {

std::vector<double> ewa_distribution(const WeightState& state) {
    const std::size_t n = state.L_hat.size();
    std::vector<double> p(n);
    double lo = state.L_hat[0];
    for (double v : state.L_hat) lo = std::min(lo, v);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(-state.eta * (state.L_hat[i] - lo));
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

int sample_index(const std::vector<double>& p, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

std::vector<ExpertId> sample_expert_set(int n, int b_e, RngStream& rng) {
    std::vector<ExpertId> out(static_cast<std::size_t>(b_e));
    for (auto& e : out) e = static_cast<ExpertId>(rng.below(static_cast<std::uint64_t>(n)));
    return out;
}

std::vector<ServerId> random_permutation(int s, RngStream& rng) {
    std::vector<ServerId> order(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) order[static_cast<std::size_t>(j)] = j;
    for (int j = s - 1; j > 0; --j)
        std::swap(order[static_cast<std::size_t>(j)],
                  order[rng.below(static_cast<std::uint64_t>(j) + 1)]);
    return order;
}

namespace {

// One alpha/beta sweep; panel shifts the per-server stream so independent
// panels never reuse draws.
std::vector<int> dewa_s_sweep(const DayLocalCosts& day, int b_e, DaySession* session,
                              const TrialRng& rng, std::uint64_t panel) {
    const double alpha_p = static_cast<double>(b_e) / day.n;
    std::vector<int> fired(static_cast<std::size_t>(day.n), 0);
    for (int j = 0; j < day.s; ++j) {
        RngStream st = rng.stream(day.day, Role::Server, static_cast<std::uint64_t>(j) + panel);
        if (session) session->open_channel(j);
        for (int i = 0; i < day.n; ++i) {
            const double l = day.at(i, j);
            if (l > 1.0)
                throw SimError("BadLocalCost", "local cost exceeds 1, Bernoulli(l) is invalid");
            if (st.bernoulli(alpha_p) && st.bernoulli(l)) {
                ++fired[static_cast<std::size_t>(i)];
                if (session) {
                    session->scratch(j).buffer.push_back(l);
                    session->send_private(j, 1);  // the (i, j) tuple
                }
            }
        }
        if (session) session->scratch(j).buffer.clear();
    }
    return fired;
}

}  // namespace

std::vector<double> dewa_s_estimate(const DayLocalCosts& day, int b_e, DaySession* session,
                                    const TrialRng& rng) {
    const auto fired = dewa_s_sweep(day, b_e, session, rng, 0);
    const double scale = static_cast<double>(day.n) / b_e;
    std::vector<double> l_hat(static_cast<std::size_t>(day.n));
    for (int i = 0; i < day.n; ++i)
        l_hat[static_cast<std::size_t>(i)] = scale * fired[static_cast<std::size_t>(i)];
    return l_hat;
}

std::vector<double> dewa_s_pow2_estimate(const DayLocalCosts& day, int b_e, DaySession* session,
                                         const TrialRng& rng) {
    const auto a = dewa_s_sweep(day, b_e, session, rng, 0);
    const auto b = dewa_s_sweep(day, b_e, session, rng, 0x10000);
    const double scale = static_cast<double>(day.n) / b_e;
    std::vector<double> l_hat(static_cast<std::size_t>(day.n));
    for (int i = 0; i < day.n; ++i)
        l_hat[static_cast<std::size_t>(i)] = scale * a[static_cast<std::size_t>(i)] * scale *
                                             b[static_cast<std::size_t>(i)];
    return l_hat;
}

std::vector<double> dewa_m_estimate(const DayLocalCosts& day, const std::vector<bool>& sampled,
                                    const std::vector<ServerId>& visit_order,
                                    DaySession* session) {
    std::vector<double> cur(static_cast<std::size_t>(day.n), 0.0);
    for (ServerId j : visit_order) {
        if (session) session->open_channel(j);
        for (int i = 0; i < day.n; ++i) {
            if (!sampled[static_cast<std::size_t>(i)]) continue;
            const double l = day.at(i, j);
            if (l > cur[static_cast<std::size_t>(i)]) {
                cur[static_cast<std::size_t>(i)] = l;
                if (session) {
                    session->scratch(j).buffer.push_back(l);
                    session->send_broadcast(j, 1);
                }
            }
        }
        if (session) session->scratch(j).buffer.clear();
    }
    return cur;
}

std::vector<double> dewa_l_estimate(const DayLocalCosts& day, const std::vector<bool>& sampled,
                                    double p, int n, int b_e,
                                    const std::vector<ServerId>& visit_order, DaySession* session,
                                    const TrialRng& rng) {
    const double norm = gamma_norm(p);  // throws BadExponent for p <= 1
    const double incl = inclusion_probability(n, b_e);
    std::vector<double> cur(static_cast<std::size_t>(day.n), 0.0);
    for (ServerId j : visit_order) {
        if (session) session->open_channel(j);
        RngStream st = rng.stream(day.day, Role::Server, static_cast<std::uint64_t>(j));
        const double e_j = st.exponential();
        if (session) session->scratch(j).buffer.push_back(e_j);
        for (int i = 0; i < day.n; ++i) {
            if (!sampled[static_cast<std::size_t>(i)]) continue;
            const double c = std::pow(day.at(i, j), p) / e_j;
            if (c > cur[static_cast<std::size_t>(i)]) {
                cur[static_cast<std::size_t>(i)] = c;
                if (session) session->send_broadcast(j, 1);
            }
        }
        if (session) session->scratch(j).buffer.clear();
    }
    std::vector<double> l_hat(static_cast<std::size_t>(day.n), 0.0);
    for (int i = 0; i < day.n; ++i)
        if (sampled[static_cast<std::size_t>(i)])
            l_hat[static_cast<std::size_t>(i)] =
                std::pow(cur[static_cast<std::size_t>(i)], 1.0 / p) / (incl * norm);
    return l_hat;
}

std::vector<double> b_dewa_s_estimate(const DayLocalCosts& day, int b_e, int b_s,
                                      DaySession* session, const TrialRng& rng) {
    const double alpha_p = static_cast<double>(b_e) / day.n;
    const double beta_p = static_cast<double>(b_s) / day.s;
    std::vector<double> acc(static_cast<std::size_t>(day.n), 0.0);
    for (int j = 0; j < day.s; ++j) {
        RngStream st = rng.stream(day.day, Role::Server, static_cast<std::uint64_t>(j));
        if (session) session->open_channel(j);
        for (int i = 0; i < day.n; ++i) {
            if (st.bernoulli(alpha_p) && st.bernoulli(beta_p)) {
                acc[static_cast<std::size_t>(i)] += day.at(i, j);
                if (session) session->send_private(j, 1);  // the cost value
            }
        }
        if (session) session->scratch(j).buffer.clear();
    }
    const double scale =
        static_cast<double>(day.n) * day.s / (static_cast<double>(b_e) * b_s);
    for (double& v : acc) v *= scale;
    return acc;
}

std::vector<double> b_dewa_m_estimate(const DayLocalCosts& day,
                                      const std::vector<ExpertId>& sampled_distinct, int k_probe,
                                      DaySession* session, const TrialRng& rng) {
    if (k_probe > day.s) throw SimError("BudgetOutOfRange", "k_probe exceeds server count");
    if (session)
        for (int j = 0; j < day.s; ++j) session->open_channel(j);
    std::vector<double> l_hat(static_cast<std::size_t>(day.n), 0.0);
    for (ExpertId i : sampled_distinct) {
        RngStream st = rng.stream(day.day, Role::Sampling, 1000 + static_cast<std::uint64_t>(i));
        // partial Fisher-Yates: first k_probe entries of a random permutation
        std::vector<ServerId> pool(static_cast<std::size_t>(day.s));
        for (int j = 0; j < day.s; ++j) pool[static_cast<std::size_t>(j)] = j;
        double mx = 0.0;
        for (int k = 0; k < k_probe; ++k) {
            const auto pick =
                k + static_cast<int>(st.below(static_cast<std::uint64_t>(day.s - k)));
            std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
            const ServerId j = pool[static_cast<std::size_t>(k)];
            mx = std::max(mx, day.at(i, j));
            if (session) session->send_private(j, 1);
        }
        l_hat[static_cast<std::size_t>(i)] = mx;
    }
    return l_hat;
}

ExpertId Protocol::select_expert(const std::vector<double>& p, int day, const TrialRng& rng) {
    RngStream st = rng.stream(day, Role::Selection, 0);
    return sample_index(p, st);
}

namespace {

class EwaProtocol : public Protocol {
public:
    EwaProtocol(int n, double eta, AggregationSpec agg) : state_{std::vector<double>(n, 0.0), eta}, agg_(agg) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng&,
                     ExpertId) override {
        for (int j = 0; j < day.s; ++j) {
            session.open_channel(j);
            session.send_private(j, day.n);  // every local cost, one word each
        }
        const auto l = true_costs(day, agg_);
        for (int i = 0; i < day.n; ++i) state_.L_hat[static_cast<std::size_t>(i)] += l[i];
    }

private:
    WeightState state_;
    AggregationSpec agg_;
};

class Exp3Protocol : public Protocol {
public:
    Exp3Protocol(int n, double eta, double gamma, AggregationSpec agg)
        : state_{std::vector<double>(n, 0.0), eta}, gamma_(gamma), agg_(agg) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        auto p = ewa_distribution(state_);
        const double u = gamma_ / p.size();
        for (double& v : p) v = (1.0 - gamma_) * v + u;
        committed_ = p;
        return p;
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng&,
                     ExpertId selected) override {
        // Query the chosen expert's local cost from every server.
        double acc_cost = 0.0;
        std::vector<double> row(static_cast<std::size_t>(day.s));
        for (int j = 0; j < day.s; ++j) {
            session.open_channel(j);
            session.send_private(j, 1);
            row[static_cast<std::size_t>(j)] = day.at(selected, j);
        }
        acc_cost = aggregate(agg_, row);
        state_.L_hat[static_cast<std::size_t>(selected)] +=
            acc_cost / committed_[static_cast<std::size_t>(selected)];
    }

private:
    WeightState state_;
    double gamma_;
    AggregationSpec agg_;
    std::vector<double> committed_;
};

class DewaSProtocol : public Protocol {
public:
    DewaSProtocol(int n, double eta, int b_e, int q)
        : state_{std::vector<double>(n, 0.0), eta}, b_e_(b_e), q_(q) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId) override {
        const auto est = q_ == 2 ? dewa_s_pow2_estimate(day, b_e_, &session, rng)
                                 : dewa_s_estimate(day, b_e_, &session, rng);
        for (int i = 0; i < day.n; ++i)
            state_.L_hat[static_cast<std::size_t>(i)] += est[static_cast<std::size_t>(i)];
    }

private:
    WeightState state_;
    int b_e_;
    int q_;
};

class DewaMProtocol : public Protocol {
public:
    DewaMProtocol(int n, double eta, int b_e, bool unbias)
        : state_{std::vector<double>(n, 0.0), eta}, n_(n), b_e_(b_e), unbias_(unbias) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId) override {
        RngStream sample_rng = rng.stream(day.day, Role::Sampling, 0);
        RngStream perm_rng = rng.stream(day.day, Role::Permutation, 0);
        std::vector<bool> sampled(static_cast<std::size_t>(n_), false);
        for (ExpertId i : sample_expert_set(n_, b_e_, sample_rng))
            sampled[static_cast<std::size_t>(i)] = true;
        auto est = dewa_m_estimate(day, sampled, random_permutation(day.s, perm_rng), &session);
        if (unbias_) {
            const double incl = inclusion_probability(n_, b_e_);
            for (double& v : est) v /= incl;
        }
        for (int i = 0; i < day.n; ++i)
            state_.L_hat[static_cast<std::size_t>(i)] += est[static_cast<std::size_t>(i)];
    }

private:
    WeightState state_;
    int n_;
    int b_e_;
    bool unbias_;
};

class DewaLProtocol : public Protocol {
public:
    DewaLProtocol(int n, double eta, int b_e, double p)
        : state_{std::vector<double>(n, 0.0), eta}, n_(n), b_e_(b_e), p_(p) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId) override {
        RngStream sample_rng = rng.stream(day.day, Role::Sampling, 0);
        RngStream perm_rng = rng.stream(day.day, Role::Permutation, 0);
        std::vector<bool> sampled(static_cast<std::size_t>(n_), false);
        for (ExpertId i : sample_expert_set(n_, b_e_, sample_rng))
            sampled[static_cast<std::size_t>(i)] = true;
        const auto est = dewa_l_estimate(day, sampled, p_, n_, b_e_,
                                         random_permutation(day.s, perm_rng), &session, rng);
        for (int i = 0; i < day.n; ++i)
            state_.L_hat[static_cast<std::size_t>(i)] += est[static_cast<std::size_t>(i)];
    }

private:
    WeightState state_;
    int n_;
    int b_e_;
    double p_;
};

class BDewaSProtocol : public Protocol {
public:
    BDewaSProtocol(int n, double eta, int b_e, int b_s)
        : state_{std::vector<double>(n, 0.0), eta}, b_e_(b_e), b_s_(b_s) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId) override {
        const auto est = b_dewa_s_estimate(day, b_e_, b_s_, &session, rng);
        for (int i = 0; i < day.n; ++i)
            state_.L_hat[static_cast<std::size_t>(i)] += est[static_cast<std::size_t>(i)];
    }

private:
    WeightState state_;
    int b_e_;
    int b_s_;
};

class BDewaMProtocol : public Protocol {
public:
    BDewaMProtocol(int n, double eta, int b_e, int k_probe)
        : state_{std::vector<double>(n, 0.0), eta}, n_(n), b_e_(b_e), k_probe_(k_probe) {}

    std::vector<double> begin_day(int, const TrialRng&) override {
        return ewa_distribution(state_);
    }

    void execute_day(const DayLocalCosts& day, DaySession& session, const TrialRng& rng,
                     ExpertId) override {
        RngStream sample_rng = rng.stream(day.day, Role::Sampling, 0);
        std::vector<bool> mask(static_cast<std::size_t>(n_), false);
        for (ExpertId i : sample_expert_set(n_, b_e_, sample_rng))
            mask[static_cast<std::size_t>(i)] = true;
        std::vector<ExpertId> distinct;
        for (int i = 0; i < n_; ++i)
            if (mask[static_cast<std::size_t>(i)]) distinct.push_back(i);
        const auto est = b_dewa_m_estimate(day, distinct, k_probe_, &session, rng);
        for (int i = 0; i < day.n; ++i)
            state_.L_hat[static_cast<std::size_t>(i)] += est[static_cast<std::size_t>(i)];
    }

private:
    WeightState state_;
    int n_;
    int b_e_;
    int k_probe_;
};

std::unique_ptr<Protocol> make_base(const ExperimentConfig& cfg) {
    const std::string base = base_protocol(cfg.protocol);
    if (base == "ewa") return std::make_unique<EwaProtocol>(cfg.n, cfg.eta, cfg.aggregation);
    if (base == "exp3") {
        double gamma = cfg.exp3_gamma;
        if (gamma <= 0)
            gamma = std::min(1.0, std::sqrt(cfg.n * std::log(static_cast<double>(cfg.n)) /
                                            static_cast<double>(cfg.T)));
        return std::make_unique<Exp3Protocol>(cfg.n, cfg.eta, gamma, cfg.aggregation);
    }
    if (base == "dewa-s") {
        const int q = cfg.aggregation.kind == Aggregation::PowerOfSum ? cfg.aggregation.q : 1;
        return std::make_unique<DewaSProtocol>(cfg.n, cfg.eta, cfg.b_e, q);
    }
    if (base == "dewa-m")
        return std::make_unique<DewaMProtocol>(cfg.n, cfg.eta, cfg.b_e, cfg.unbias_max);
    if (base == "dewa-l")
        return std::make_unique<DewaLProtocol>(cfg.n, cfg.eta, cfg.b_e, cfg.aggregation.p);
    if (base == "b-dewa-s")
        return std::make_unique<BDewaSProtocol>(cfg.n, cfg.eta, cfg.b_e, cfg.b_s);
    if (base == "b-dewa-m") {
        int k = cfg.k_probe;
        if (k <= 0)
            k = std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(cfg.s)))));
        return std::make_unique<BDewaMProtocol>(cfg.n, cfg.eta, cfg.b_e, k);
    }
    throw SimError("UnknownProtocol", "no protocol named '" + cfg.protocol + "'");
}

}  // namespace

std::unique_ptr<Protocol> make_protocol(const ExperimentConfig& cfg) {
    if (!is_meta_protocol(cfg.protocol)) return make_base(cfg);
    const int K = cfg.K > 0 ? cfg.K : default_K(cfg.T);
    const double eta_meta = cfg.eta_meta > 0 ? cfg.eta_meta : default_eta_meta(K, cfg.T);
    std::vector<std::unique_ptr<Protocol>> children;
    children.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) children.push_back(make_base(cfg));
    return std::make_unique<MetaProtocol>(std::move(children), eta_meta, cfg.aggregation);
}

}  // namespace dexperts
