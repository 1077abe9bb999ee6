#include "dexperts/netsim.hpp"

#include <sstream>

namespace dexperts {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::ChannelInit: return "channel_init";
        case EventKind::ServerTurn: return "server_turn";
        case EventKind::Payload: return "payload";
    }
    return "?";
}

void CommLedger::charge(const CommEvent& ev) {
    if (ev.words < 1) throw SimError("BadEvent", "payloads cost at least one word");
    if (ev.day >= static_cast<int>(per_day.size()))
        per_day.resize(static_cast<std::size_t>(ev.day) + 1, 0);
    total_words += ev.words;
    per_day[static_cast<std::size_t>(ev.day)] += ev.words;
    per_kind[static_cast<int>(ev.kind)] += ev.words;
}

void CommLedger::merge(const CommLedger& other) {
    total_words += other.total_words;
    if (other.per_day.size() > per_day.size()) per_day.resize(other.per_day.size(), 0);
    for (std::size_t t = 0; t < other.per_day.size(); ++t) per_day[t] += other.per_day[t];
    for (int k = 0; k < 3; ++k) per_kind[k] += other.per_kind[k];
}

void assert_memoryless(const std::vector<ServerScratch>& servers) {
    for (std::size_t j = 0; j < servers.size(); ++j)
        if (!servers[j].buffer.empty())
            throw SimError("MemoryBoundViolation",
                           "server " + std::to_string(j) + " carries " +
                               std::to_string(servers[j].buffer.size()) +
                               " words across the day boundary");
}

void DaySession::open_channel(ServerId j) {
    record({day_,
            model_ == CommModel::MessagePassing ? EventKind::ChannelInit : EventKind::ServerTurn,
            j, 1});
}

void DaySession::send_private(ServerId from, int words) {
    record({day_, EventKind::Payload, from, words});
}

void DaySession::send_broadcast(ServerId from, int words) {
    if (model_ != CommModel::Broadcast)
        throw SimError("ModelViolation",
                       "broadcast payload requested under the message-passing model");
    record({day_, EventKind::Payload, from, words});
}

void DaySession::end_day() {
    for (auto& sv : servers_) sv.buffer.clear();
}

void DaySession::record(const CommEvent& ev) {
    ledger_.charge(ev);
    if (transcript_) transcript_->push_back(ev);
}

std::string format_transcript(const std::vector<CommEvent>& events) {
    std::ostringstream out;
    for (const auto& ev : events)
        out << ev.day << '\t' << event_kind_name(ev.kind) << '\t' << ev.server << '\t' << ev.words
            << '\n';
    return out.str();
}

long long replay_total(const std::vector<CommEvent>& events) {
    long long total = 0;
    for (const auto& ev : events) total += ev.words;
    return total;
}

}  // namespace dexperts
