#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "dexperts/core.hpp"
#include "dexperts/rng.hpp"

using namespace dexperts;

namespace {

bool has_code(const std::vector<std::string>& errors, const std::string& code) {
    return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) {
        return e.rfind(code + ":", 0) == 0;
    });
}

}  // namespace

TEST_CASE("protocol identifier catalogue") {
    CHECK(known_protocol("ewa"));
    CHECK(known_protocol("dewa-s-p"));
    CHECK(known_protocol("b-dewa-m"));
    CHECK_FALSE(known_protocol("dewa-x"));
    CHECK_FALSE(known_protocol(""));

    CHECK(is_meta_protocol("dewa-m-p"));
    CHECK_FALSE(is_meta_protocol("dewa-m"));
    CHECK(base_protocol("b-dewa-s-p") == "b-dewa-s");
    CHECK(base_protocol("exp3") == "exp3");
}

TEST_CASE("default config validates cleanly") {
    ExperimentConfig cfg;
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("budget bounds") {
    ExperimentConfig cfg;
    cfg.b_e = 0;
    CHECK(has_code(validate_config(cfg), "BudgetOutOfRange"));
    cfg.b_e = cfg.n + 1;
    CHECK(has_code(validate_config(cfg), "BudgetOutOfRange"));
    cfg.b_e = cfg.n;
    CHECK(validate_config(cfg).empty());

    cfg.b_s = cfg.s + 1;
    CHECK(has_code(validate_config(cfg), "BudgetOutOfRange"));
}

TEST_CASE("broadcast-only protocols reject message passing") {
    ExperimentConfig cfg;
    cfg.protocol = "dewa-m";
    cfg.aggregation.kind = Aggregation::Max;
    cfg.comm_model = CommModel::MessagePassing;
    CHECK(has_code(validate_config(cfg), "IncompatibleModel"));
    cfg.comm_model = CommModel::Broadcast;
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("protocol and aggregation pairing") {
    ExperimentConfig cfg;
    cfg.protocol = "dewa-s";
    cfg.aggregation.kind = Aggregation::Max;
    CHECK(has_code(validate_config(cfg), "IncompatibleAggregation"));

    cfg.aggregation.kind = Aggregation::PowerOfSum;
    cfg.aggregation.q = 3;
    CHECK(has_code(validate_config(cfg), "BadExponent"));
    cfg.aggregation.q = 2;
    CHECK(validate_config(cfg).empty());

    cfg.protocol = "dewa-l";
    cfg.comm_model = CommModel::Broadcast;
    cfg.aggregation.kind = Aggregation::Lp;
    cfg.aggregation.p = 2.0;
    cfg.epsilon = 0.5;
    CHECK(validate_config(cfg).empty());
    cfg.epsilon = 1.1;
    CHECK(has_code(validate_config(cfg), "BadExponent"));
    cfg.epsilon = 0.5;
    cfg.aggregation.p = 1.4;  // 1 + epsilon >= p
    CHECK(has_code(validate_config(cfg), "BadExponent"));
}

TEST_CASE("stream invariants") {
    ExperimentConfig cfg;
    cfg.stream.kind = StreamKind::DiffDist;
    cfg.stream.diffdist_eps = 0.6;
    CHECK(has_code(validate_config(cfg), "BadExponent"));
    cfg.stream.diffdist_eps = 0.2;
    CHECK(validate_config(cfg).empty());
    cfg.stream.sparse = true;
    CHECK(has_code(validate_config(cfg), "BadStream"));

    cfg.stream = StreamSpec{};
    cfg.stream.kind = StreamKind::Trace;
    CHECK(has_code(validate_config(cfg), "BadStream"));
}

TEST_CASE("multiple violations are all reported") {
    ExperimentConfig cfg;
    cfg.protocol = "nope";
    cfg.n = 0;
    cfg.eta = -1;
    const auto errors = validate_config(cfg);
    CHECK(has_code(errors, "UnknownProtocol"));
    CHECK(has_code(errors, "BadDimension"));
    CHECK(has_code(errors, "BadLearningRate"));
}

TEST_CASE("derived streams are deterministic") {
    auto a = derive_stream(42, 3, 17, Role::Server, 9);
    auto b = derive_stream(42, 3, 17, Role::Server, 9);
    for (int k = 0; k < 64; ++k) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct derivation tuples diverge") {
    const std::uint64_t base = derive_stream(42, 3, 17, Role::Server, 9).next_u64();
    CHECK(derive_stream(43, 3, 17, Role::Server, 9).next_u64() != base);
    CHECK(derive_stream(42, 4, 17, Role::Server, 9).next_u64() != base);
    CHECK(derive_stream(42, 3, 18, Role::Server, 9).next_u64() != base);
    CHECK(derive_stream(42, 3, 17, Role::Sampling, 9).next_u64() != base);
    CHECK(derive_stream(42, 3, 17, Role::Server, 10).next_u64() != base);
}

TEST_CASE("uniform draws stay in [0, 1) and fill the range") {
    auto rng = derive_stream(7, 0, 0, Role::Generator, 0);
    double lo = 1.0, hi = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("below covers every residue") {
    auto rng = derive_stream(7, 0, 0, Role::Sampling, 0);
    std::set<std::uint64_t> seen;
    for (int k = 0; k < 1000; ++k) {
        const auto v = rng.below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}
