#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dexperts/core.hpp"

namespace dexperts {

enum class EventKind { ChannelInit, ServerTurn, Payload };

const char* event_kind_name(EventKind k);

struct CommEvent {
    int day = 0;
    EventKind kind = EventKind::Payload;
    ServerId server = -1;
    int words = 1;
};

// Word-level accounting. One word per channel init / server turn, one word
// per scalar or (i, j) tuple payload. Counters only ever grow.
struct CommLedger {
    long long total_words = 0;
    std::vector<long long> per_day;
    long long per_kind[3] = {0, 0, 0};

    void charge(const CommEvent& ev);
    long long kind_total(EventKind k) const { return per_kind[static_cast<int>(k)]; }
    void merge(const CommLedger& other);
};

// Per-day scratch on a server; must be empty at every day boundary (the
// servers carry zero words across days).
struct ServerScratch {
    std::vector<double> buffer;
};

// Throws MemoryBoundViolation naming the first offending server.
void assert_memoryless(const std::vector<ServerScratch>& servers);

// One day of coordinator-driven communication. Protocols route every word
// through this object; the regret tracker never touches it.
class DaySession {
public:
    DaySession(CommModel model, int day, CommLedger& ledger, std::vector<ServerScratch>& servers,
               std::vector<CommEvent>* transcript = nullptr)
        : model_(model), day_(day), ledger_(ledger), servers_(servers), transcript_(transcript) {}

    CommModel model() const { return model_; }
    int day() const { return day_; }
    ServerScratch& scratch(ServerId j) { return servers_[static_cast<std::size_t>(j)]; }

    // Opens the channel to one server: 1 word. ChannelInit under
    // message-passing, ServerTurn under broadcast.
    void open_channel(ServerId j);

    // Payload visible to one endpoint (always legal).
    void send_private(ServerId from, int words);

    // Payload visible to everyone; charged once. Broadcast model only.
    void send_broadcast(ServerId from, int words);

    // Clears every server's scratch. Must be called at day end.
    void end_day();

private:
    void record(const CommEvent& ev);

    CommModel model_;
    int day_;
    CommLedger& ledger_;
    std::vector<ServerScratch>& servers_;
    std::vector<CommEvent>* transcript_;
};

// Debug transcript dump: one event per line, tab-separated
// (day, kind, server, words).
std::string format_transcript(const std::vector<CommEvent>& events);

// Recompute a total from a transcript (replay check for ledger conservation).
long long replay_total(const std::vector<CommEvent>& events);

}  // namespace dexperts
