#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/ledger.hpp"

namespace qvanet::netsim {

// Vehicle-side operations TR/CR/CRM/TC, RSU-side TV/DM/CV/CC; TV and CV are
// local steps, the rest travel as messages. ACK relays a heard transaction to
// the RSU and AUTH broadcasts the verdict (plus the freshly mined block).
enum class MsgType { TR, ACK, DM, TC, AUTH, CR, CRM, CV, CC };

inline std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::TR: return "TR";
    case MsgType::ACK: return "ACK";
    case MsgType::DM: return "DM";
    case MsgType::TC: return "TC";
    case MsgType::AUTH: return "AUTH";
    case MsgType::CR: return "CR";
    case MsgType::CRM: return "CRM";
    case MsgType::CV: return "CV";
    case MsgType::CC: return "CC";
  }
  return "?";
}

// Destination values: a node id, kBroadcast (every other node in range) or
// kBroadcastVehicles (vehicles only; transaction requests are V2V traffic the
// RSU learns about through ACKs).
inline constexpr const char* kBroadcast = "broadcast";
inline constexpr const char* kBroadcastVehicles = "broadcast_vehicles";

struct Message {
  MsgType type = MsgType::TR;
  std::string src;
  std::string dst;
  std::int64_t sent_at_ms = 0;
  unsigned size_bytes = 100;  // fixed frame size

  std::optional<ledger::Transaction> tx;            // TR, ACK, DM
  std::optional<ledger::Vote> vote;                 // TC
  std::optional<ledger::ConsensusResult> verdict;   // AUTH
  std::optional<ledger::Block> block;               // AUTH piggyback
  std::optional<ledger::Chain> chain;               // CRM
  std::string token;                                // CR randomized address token
};

inline Message make_tc(std::string src, std::string dst, ledger::Vote vote,
                       std::int64_t sent_at_ms) {
  Message m;
  m.type = MsgType::TC;
  m.src = std::move(src);
  m.dst = std::move(dst);
  m.vote = std::move(vote);
  m.sent_at_ms = sent_at_ms;
  return m;
}

inline Message make_dm(std::string src, std::string dst, ledger::Transaction tx,
                       std::int64_t sent_at_ms) {
  Message m;
  m.type = MsgType::DM;
  m.src = std::move(src);
  m.dst = std::move(dst);
  m.tx = std::move(tx);
  m.sent_at_ms = sent_at_ms;
  return m;
}

enum class EventKind {
  Sent,
  Received,
  VerdictIssued,
  BlockMined,
  VehicleBlocked,
  VehicleJoined,
  AttackStep,
  Expired
};

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Sent: return "Sent";
    case EventKind::Received: return "Received";
    case EventKind::VerdictIssued: return "VerdictIssued";
    case EventKind::BlockMined: return "BlockMined";
    case EventKind::VehicleBlocked: return "VehicleBlocked";
    case EventKind::VehicleJoined: return "VehicleJoined";
    case EventKind::AttackStep: return "AttackStep";
    case EventKind::Expired: return "Expired";
  }
  return "?";
}

struct SimEvent {
  std::uint64_t seq = 0;
  double time_s = 0.0;
  EventKind kind = EventKind::Sent;
  std::string node_id;
  nlohmann::json detail;

  nlohmann::json to_json() const {
    return nlohmann::json{{"detail", detail},
                          {"kind", to_string(kind)},
                          {"node_id", node_id},
                          {"seq", seq},
                          {"time_s", time_s}};
  }
};

class EventLog {
 public:
  std::uint64_t peek_next_seq() const { return next_seq_; }

  std::uint64_t emit(std::int64_t time_ms, EventKind kind, std::string node_id,
                     nlohmann::json detail) {
    SimEvent ev;
    ev.seq = next_seq_++;
    ev.time_s = static_cast<double>(time_ms) / 1000.0;
    ev.kind = kind;
    ev.node_id = std::move(node_id);
    ev.detail = std::move(detail);
    events_.push_back(std::move(ev));
    return events_.back().seq;
  }

  const std::vector<SimEvent>& events() const { return events_; }

  // Folds protocol outcomes discovered while handling a message into the
  // already-logged transport event (seq doubles as the vector index).
  void amend(std::uint64_t seq, const nlohmann::json& extra) {
    events_.at(seq).detail.update(extra);
  }

  // One event per line; the file format of events.jsonl.
  void write_jsonl(std::ostream& out) const {
    for (const auto& ev : events_) out << ev.to_json().dump() << "\n";
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& ev : events_) {
      out += ev.to_json().dump();
      out += "\n";
    }
    return out;
  }

 private:
  std::uint64_t next_seq_ = 0;
  std::vector<SimEvent> events_;
};

}  // namespace qvanet::netsim
