#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qvanet/netsim/events.hpp"

namespace qvanet::netsim {

struct NodeStats {
  std::string node_id;
  std::uint64_t transmitted = 0;
  std::uint64_t received = 0;
  std::map<std::string, std::uint64_t> sent_by_type;
  std::map<std::string, std::uint64_t> received_by_type;
};

// Per-node message accounting straight from the event log.
inline std::map<std::string, NodeStats> collect_stats(const std::vector<SimEvent>& events) {
  std::map<std::string, NodeStats> stats;
  for (const auto& ev : events) {
    if (ev.kind != EventKind::Sent && ev.kind != EventKind::Received) continue;
    NodeStats& s = stats[ev.node_id];
    s.node_id = ev.node_id;
    const std::string type = ev.detail.value("msg_type", "?");
    if (ev.kind == EventKind::Sent) {
      s.transmitted += 1;
      s.sent_by_type[type] += 1;
    } else {
      s.received += 1;
      s.received_by_type[type] += 1;
    }
  }
  return stats;
}

inline std::string stats_to_csv(const std::map<std::string, NodeStats>& stats) {
  std::string out = "node_id,msg_type,sent,received\n";
  for (const auto& [id, s] : stats) {
    std::set<std::string> types;
    for (const auto& [t, n] : s.sent_by_type) {
      (void)n;
      types.insert(t);
    }
    for (const auto& [t, n] : s.received_by_type) {
      (void)n;
      types.insert(t);
    }
    for (const auto& t : types) {
      const auto sent = s.sent_by_type.count(t) ? s.sent_by_type.at(t) : 0;
      const auto recv = s.received_by_type.count(t) ? s.received_by_type.at(t) : 0;
      out += id + "," + t + "," + std::to_string(sent) + "," + std::to_string(recv) + "\n";
    }
  }
  return out;
}

}  // namespace qvanet::netsim
