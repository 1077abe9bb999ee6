#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dexperts/aggregation.hpp"
#include "dexperts/costgen.hpp"
#include "dexperts/harness.hpp"
#include "test_util.hpp"

using namespace dexperts;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("a single expert has zero regret forever") {
    ExperimentConfig cfg;
    cfg.n = 1;
    cfg.s = 4;
    cfg.T = 60;
    cfg.b_e = 1;
    cfg.protocol = "ewa";
    cfg.seed = 1;
    const auto trial = run_trial(cfg, 0);
    for (double r : trial.regret.avg_regret_series) CHECK(r == 0.0);
}

TEST_CASE("regret replays from the selections and the stream") {
    ExperimentConfig cfg;
    cfg.n = 15;
    cfg.s = 6;
    cfg.T = 120;
    cfg.b_e = 2;
    cfg.protocol = "dewa-s";
    cfg.seed = 42;
    const auto trial = run_trial(cfg, 0);

    CostStream stream(cfg.stream, cfg.aggregation, cfg.n, cfg.s);
    double alg = 0.0;
    std::vector<double> cum(static_cast<std::size_t>(cfg.n), 0.0);
    for (int t = 0; t < cfg.T; ++t) {
        const auto day = stream.next_day({t, {}}, cfg.seed, 0, t);
        const auto truth = true_costs(day, cfg.aggregation);
        alg += truth[static_cast<std::size_t>(trial.selections[static_cast<std::size_t>(t)])];
        for (int i = 0; i < cfg.n; ++i) cum[static_cast<std::size_t>(i)] += truth[i];
    }
    const double best = *std::min_element(cum.begin(), cum.end());
    CHECK(trial.regret.avg_regret_series.back() ==
          doctest::Approx((alg - best) / cfg.T).epsilon(1e-12));
    CHECK(trial.regret.cum_alg_cost == doctest::Approx(alg).epsilon(1e-12));
}

TEST_CASE("serial and parallel experiments are identical") {
    ExperimentConfig cfg;
    cfg.n = 20;
    cfg.s = 8;
    cfg.T = 80;
    cfg.b_e = 2;
    cfg.protocol = "dewa-s";
    cfg.seed = 9;
    cfg.trials = 8;
    const auto serial = run_experiment(cfg, false);
    const auto parallel = run_experiment(cfg, true);
    CHECK(serial.mean_avg_regret == parallel.mean_avg_regret);
    CHECK(serial.stderr_avg_regret == parallel.stderr_avg_regret);
    CHECK(serial.merged_ledger.total_words == parallel.merged_ledger.total_words);
    for (int t = 0; t < cfg.trials; ++t)
        CHECK(serial.trials[static_cast<std::size_t>(t)].selections ==
              parallel.trials[static_cast<std::size_t>(t)].selections);
}

TEST_CASE("persisted outputs are deterministic and well shaped") {
    ExperimentConfig cfg;
    cfg.n = 10;
    cfg.s = 4;
    cfg.T = 30;
    cfg.b_e = 2;
    cfg.protocol = "dewa-s";
    cfg.seed = 2;
    cfg.trials = 3;
    const auto result = run_experiment(cfg);

    const auto dir_a = std::filesystem::temp_directory_path() / "dexperts_out_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "dexperts_out_b";
    persist_results(result, cfg, dir_a.string());
    persist_results(result, cfg, dir_b.string());

    for (const char* name : {"regret.csv", "comm.json", "config.json"})
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));

    const std::string csv = slurp(dir_a / "regret.csv");
    CHECK(csv.rfind("t,mean_avg_regret,stderr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == cfg.T + 1);
    CHECK(csv.find("\n1,") != std::string::npos);  // 1-indexed days

    const std::string config = slurp(dir_a / "config.json");
    CHECK(config.find("\"protocol\": \"dewa-s\"") != std::string::npos);
    CHECK(config.find("\"aggregation\": \"sum\"") != std::string::npos);
}

TEST_CASE("persisting an empty experiment fails loudly") {
    ExperimentResult empty;
    ExperimentConfig cfg;
    CHECK(error_code([&] { persist_results(empty, cfg, "/tmp/dexperts_empty"); }) ==
          "NothingToPersist");
}

TEST_CASE("diffdist classification thresholds") {
    const double c = std::sqrt(2.0 * std::log(24.0));
    const double R = 1.0 / (2.0 + c);
    const auto result = run_diffdist(R, 10, 400, 4, "ewa", 4, 3);
    const double threshold = (1.0 - R * c) / 2.0;
    REQUIRE(result.outcomes.size() == 4);
    int case_a = 0;
    for (const auto& out : result.outcomes) {
        CHECK(out.threshold == doctest::Approx(threshold));
        CHECK(out.verdict_case_a == (out.C_hat > threshold));
        if (out.truth_case_a) ++case_a;
    }
    CHECK(case_a == 2);  // balanced by construction
    CHECK(result.eps < 0.5);
    CHECK(result.eps > 0.0);
}

TEST_CASE("diffdist precondition T R^2 >= 1") {
    CHECK(error_code([] { run_diffdist(0.01, 10, 100, 4, "ewa", 2, 1); }) ==
          "PreconditionViolated");
}

TEST_CASE("communication totals do not depend on the regret bookkeeping") {
    // same protocol and seed, different stream scales: ewa's schedule is fixed
    ExperimentConfig a;
    a.n = 8;
    a.s = 3;
    a.T = 25;
    a.b_e = 8;
    a.protocol = "ewa";
    a.seed = 6;
    ExperimentConfig b = a;
    b.stream.kind = StreamKind::Bernoulli;
    CHECK(run_trial(a, 0).ledger.total_words == run_trial(b, 0).ledger.total_words);
}
