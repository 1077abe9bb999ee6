#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>

#include "dexperts/harness.hpp"
#include "dexperts/netsim.hpp"
#include "dexperts/protocols.hpp"
#include "test_util.hpp"

using namespace dexperts;

TEST_CASE("ledger charges and kind split") {
    CommLedger ledger;
    std::vector<ServerScratch> servers(2);
    DaySession session(CommModel::MessagePassing, 0, ledger, servers);
    session.open_channel(0);
    session.send_private(0, 3);
    session.open_channel(1);
    session.send_private(1, 1);
    CHECK(ledger.total_words == 6);
    CHECK(ledger.kind_total(EventKind::ChannelInit) == 2);
    CHECK(ledger.kind_total(EventKind::Payload) == 4);
    CHECK(ledger.kind_total(EventKind::ServerTurn) == 0);
    CHECK(ledger.per_day.at(0) == 6);
}

TEST_CASE("broadcast turns are a distinct kind") {
    CommLedger ledger;
    std::vector<ServerScratch> servers(1);
    DaySession session(CommModel::Broadcast, 2, ledger, servers);
    session.open_channel(0);
    session.send_broadcast(0, 1);
    CHECK(ledger.kind_total(EventKind::ServerTurn) == 1);
    CHECK(ledger.kind_total(EventKind::Payload) == 1);
}

TEST_CASE("broadcast payload is illegal under message passing") {
    CommLedger ledger;
    std::vector<ServerScratch> servers(1);
    DaySession session(CommModel::MessagePassing, 0, ledger, servers);
    CHECK(error_code([&] { session.send_broadcast(0, 1); }) == "ModelViolation");
}

TEST_CASE("zero-word payloads are rejected") {
    CommLedger ledger;
    CHECK(error_code([&] { ledger.charge({0, EventKind::Payload, 0, 0}); }) == "BadEvent");
}

TEST_CASE("end_day clears scratch, dirty scratch is caught") {
    CommLedger ledger;
    std::vector<ServerScratch> servers(3);
    DaySession session(CommModel::MessagePassing, 0, ledger, servers);
    session.scratch(1).buffer.push_back(0.5);
    CHECK(error_code([&] { assert_memoryless(servers); }) == "MemoryBoundViolation");
    session.end_day();
    CHECK(error_code([&] { assert_memoryless(servers); }).empty());
}

TEST_CASE("ledger merge is additive") {
    CommLedger a, b;
    a.charge({0, EventKind::ChannelInit, 0, 1});
    b.charge({1, EventKind::Payload, 0, 4});
    a.merge(b);
    CHECK(a.total_words == 5);
    CHECK(a.per_day.size() == 2);
    CHECK(a.per_day[1] == 4);
}

TEST_CASE("ewa spends exactly s + n*s words every day") {
    ExperimentConfig cfg;
    cfg.n = 10;
    cfg.s = 5;
    cfg.T = 17;
    cfg.b_e = 10;
    cfg.protocol = "ewa";
    cfg.seed = 4;
    const auto trial = run_trial(cfg, 0);
    for (long long t = 0; t < cfg.T; ++t)
        CHECK(trial.ledger.per_day[static_cast<std::size_t>(t)] == cfg.s + cfg.n * cfg.s);
    CHECK(trial.ledger.total_words == cfg.T * (cfg.n * cfg.s + cfg.s));
}

TEST_CASE("exp3 word ratio is 2/(n+1)") {
    ExperimentConfig cfg;
    cfg.n = 100;
    cfg.s = 50;
    cfg.T = 200;
    cfg.b_e = 1;
    cfg.protocol = "exp3";
    cfg.seed = 5;
    const auto result = run_experiment(cfg);
    CHECK(result.ewa_ratio == doctest::Approx(2.0 / 101.0).epsilon(1e-12));
}

TEST_CASE("transcript replay matches the ledger") {
    ExperimentConfig cfg;
    cfg.n = 20;
    cfg.s = 8;
    cfg.T = 50;
    cfg.b_e = 3;
    cfg.protocol = "dewa-s";
    cfg.seed = 11;
    std::vector<CommEvent> transcript;
    const auto trial = run_trial(cfg, 0, &transcript);
    CHECK(replay_total(transcript) == trial.ledger.total_words);

    const std::string dump = format_transcript(transcript);
    CHECK(dump.find("channel_init") != std::string::npos);
    // every line carries day, kind, server, words
    CHECK(std::count(dump.begin(), dump.end(), '\n') ==
          static_cast<long>(transcript.size()));
}

TEST_CASE("a quiet broadcast day still charges the server turns") {
    // dewa-m on an all-zero day: s turns, no payloads.
    DayLocalCosts day{0, 4, 3, std::vector<double>(12, 0.0)};
    CommLedger ledger;
    std::vector<ServerScratch> servers(3);
    DaySession session(CommModel::Broadcast, 0, ledger, servers);
    const auto est = dewa_m_estimate(day, std::vector<bool>(4, true), {0, 1, 2}, &session);
    CHECK(ledger.total_words == 3);
    for (double v : est) CHECK(v == 0.0);
}
