#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/ledger.hpp"

namespace qvanet::netsim {

enum class ConsensusMode { PoS, PoW };

inline std::string to_string(ConsensusMode m) { return m == ConsensusMode::PoS ? "PoS" : "PoW"; }

// Schema violations carry the offending field so the CLI can print a usable
// diagnostic.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field_path, const std::string& what)
      : std::runtime_error("'" + field_path + "': " + what), field(std::move(field_path)) {}
  std::string field;
};

struct VehicleSpec {
  std::string id;
  double position_m = 0;
  double velocity_mps = 0;
  std::uint64_t rsa_p = 0;
  std::uint64_t rsa_q = 0;
  double observation_fidelity = 1.0;
};

struct RsuSpec {
  std::string id = "rsu";
  double position_m = 0;
  std::uint64_t rsa_p = 5;
  std::uint64_t rsa_q = 11;
};

struct ScenarioEvent {
  double time_s = 0;
  std::string actor;
  std::string action;  // send_traffic_msg | launch_attack | double_spend | join
  nlohmann::json params = nlohmann::json::object();
};

struct SimConfig {
  std::vector<VehicleSpec> vehicles;
  RsuSpec rsu;
  double road_length_m = 1000.0;
  double comm_range_m = 300.0;
  std::int64_t hop_latency_ms = 10;
  double duration_s = 900.0;
  std::uint64_t seed = 1;
  unsigned fault_tolerance = 2;
  double vote_threshold = 0.5;  // Authenticated needs ones > threshold * eligible
  ConsensusMode mode = ConsensusMode::PoS;
  double key_refresh_s = 600.0;
  double initial_balance_eth = 100.0;
  std::vector<ScenarioEvent> events;

  static SimConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

template <typename T>
T get_field_or(const nlohmann::json& j, const std::string& path, const std::string& key,
               T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

}  // namespace detail

inline SimConfig SimConfig::from_json(const nlohmann::json& j) {
  using detail::get_field;
  using detail::get_field_or;
  SimConfig cfg;

  if (!j.contains("vehicles") || !j.at("vehicles").is_array())
    throw ConfigError("vehicles", "missing or not an array");
  std::size_t idx = 0;
  for (const auto& vj : j.at("vehicles")) {
    const std::string path = "vehicles[" + std::to_string(idx++) + "].";
    VehicleSpec v;
    v.id = get_field<std::string>(vj, path, "id");
    v.position_m = get_field<double>(vj, path, "position_m");
    v.velocity_mps = get_field_or<double>(vj, path, "velocity_mps", 0.0);
    if (!vj.contains("rsa")) throw ConfigError(path + "rsa", "missing");
    v.rsa_p = get_field<std::uint64_t>(vj.at("rsa"), path + "rsa.", "p");
    v.rsa_q = get_field<std::uint64_t>(vj.at("rsa"), path + "rsa.", "q");
    v.observation_fidelity = get_field_or<double>(vj, path, "observation_fidelity", 1.0);
    cfg.vehicles.push_back(std::move(v));
  }

  if (j.contains("rsu")) {
    const auto& rj = j.at("rsu");
    cfg.rsu.id = get_field_or<std::string>(rj, "rsu.", "id", "rsu");
    cfg.rsu.position_m = get_field_or<double>(rj, "rsu.", "position_m", 0.0);
    if (rj.contains("rsa")) {
      cfg.rsu.rsa_p = get_field<std::uint64_t>(rj.at("rsa"), "rsu.rsa.", "p");
      cfg.rsu.rsa_q = get_field<std::uint64_t>(rj.at("rsa"), "rsu.rsa.", "q");
    }
  }

  cfg.road_length_m = get_field_or<double>(j, "", "road_length_m", 1000.0);
  cfg.comm_range_m = get_field_or<double>(j, "", "comm_range_m", 300.0);
  cfg.hop_latency_ms = get_field_or<std::int64_t>(j, "", "hop_latency_ms", 10);
  cfg.duration_s = get_field<double>(j, "", "duration_s");
  cfg.seed = get_field_or<std::uint64_t>(j, "", "seed", 1);
  cfg.fault_tolerance = get_field_or<unsigned>(j, "", "fault_tolerance", 2);
  cfg.vote_threshold = get_field_or<double>(j, "", "vote_threshold", 0.5);
  const std::string mode = get_field_or<std::string>(j, "", "mode", "PoS");
  if (mode == "PoS") {
    cfg.mode = ConsensusMode::PoS;
  } else if (mode == "PoW") {
    cfg.mode = ConsensusMode::PoW;
  } else {
    throw ConfigError("mode", "must be 'PoS' or 'PoW'");
  }
  cfg.key_refresh_s = get_field_or<double>(j, "", "key_refresh_s", 600.0);
  cfg.initial_balance_eth = get_field_or<double>(j, "", "initial_balance_eth", 100.0);

  if (j.contains("events")) {
    if (!j.at("events").is_array()) throw ConfigError("events", "not an array");
    std::size_t eidx = 0;
    for (const auto& ej : j.at("events")) {
      const std::string path = "events[" + std::to_string(eidx++) + "].";
      ScenarioEvent ev;
      ev.time_s = get_field<double>(ej, path, "time_s");
      ev.actor = get_field<std::string>(ej, path, "actor");
      ev.action = get_field<std::string>(ej, path, "action");
      ev.params = ej.value("params", nlohmann::json::object());
      cfg.events.push_back(std::move(ev));
    }
  }

  cfg.validate();
  return cfg;
}

inline void SimConfig::validate() const {
  if (vehicles.empty()) throw ConfigError("vehicles", "at least one vehicle is required");
  if (fault_tolerance < 1) throw ConfigError("fault_tolerance", "must be >= 1");
  if (!(vote_threshold >= 0.0) || !(vote_threshold < 1.0))
    throw ConfigError("vote_threshold", "must lie in [0, 1)");
  if (!(key_refresh_s > 0)) throw ConfigError("key_refresh_s", "must be > 0");
  if (!(duration_s > 0)) throw ConfigError("duration_s", "must be > 0");
  if (!(road_length_m > 0)) throw ConfigError("road_length_m", "must be > 0");
  if (comm_range_m < 0) throw ConfigError("comm_range_m", "must be >= 0");
  if (hop_latency_ms < 0) throw ConfigError("hop_latency_ms", "must be >= 0");

  std::set<std::string> ids{rsu.id};
  std::size_t idx = 0;
  for (const auto& v : vehicles) {
    const std::string path = "vehicles[" + std::to_string(idx++) + "].";
    if (v.id.empty()) throw ConfigError(path + "id", "empty");
    if (!ids.insert(v.id).second) throw ConfigError(path + "id", "duplicate node id " + v.id);
    if (v.position_m < 0 || v.position_m > road_length_m)
      throw ConfigError(path + "position_m", "outside [0, road_length_m]");
    if (v.observation_fidelity < 0 || v.observation_fidelity > 1)
      throw ConfigError(path + "observation_fidelity", "must lie in [0, 1]");
    try {
      (void)crypto::keygen(v.rsa_p, v.rsa_q);
    } catch (const std::exception& e) {
      throw ConfigError(path + "rsa", e.what());
    }
  }
  try {
    (void)crypto::keygen(rsu.rsa_p, rsu.rsa_q);
  } catch (const std::exception& e) {
    throw ConfigError("rsu.rsa", e.what());
  }

  bool saw_attack = false;
  idx = 0;
  for (const auto& ev : events) {
    const std::string path = "events[" + std::to_string(idx++) + "].";
    if (ev.time_s < 0 || ev.time_s > duration_s)
      throw ConfigError(path + "time_s", "event beyond duration");
    if (ids.count(ev.actor) == 0 || ev.actor == rsu.id)
      throw ConfigError(path + "actor", "unknown vehicle id " + ev.actor);
    if (ev.action == "send_traffic_msg") {
      const std::string kind = ev.params.value("kind", "ordinary");
      try {
        (void)ledger::tx_kind_from_string(kind);
      } catch (const std::exception& e) {
        throw ConfigError(path + "params.kind", e.what());
      }
      if (ev.params.value("payload", std::string{}).size() > ledger::kMaxPayloadBytes)
        throw ConfigError(path + "params.payload", "exceeds 100 bytes");
    } else if (ev.action == "launch_attack") {
      const std::string victim = ev.params.value("victim", "");
      if (victim.empty() || ids.count(victim) == 0 || victim == rsu.id)
        throw ConfigError(path + "params.victim", "unknown vehicle id '" + victim + "'");
      if (victim == ev.actor) throw ConfigError(path + "params.victim", "attacker cannot target itself");
      if (saw_attack) throw ConfigError(path + "action", "only one launch_attack per scenario");
      saw_attack = true;
    } else if (ev.action == "double_spend") {
      if (ev.params.value("k", 2u) < 2) throw ConfigError(path + "params.k", "must be >= 2");
    } else if (ev.action == "join") {
      // delayed enrollment of a configured vehicle; nothing else to check
    } else {
      throw ConfigError(path + "action", "unknown action " + ev.action);
    }
  }
}

inline nlohmann::json SimConfig::to_json() const {
  nlohmann::json vehicles_json = nlohmann::json::array();
  for (const auto& v : vehicles) {
    vehicles_json.push_back({{"id", v.id},
                             {"position_m", v.position_m},
                             {"velocity_mps", v.velocity_mps},
                             {"rsa", {{"p", v.rsa_p}, {"q", v.rsa_q}}},
                             {"observation_fidelity", v.observation_fidelity}});
  }
  nlohmann::json events_json = nlohmann::json::array();
  for (const auto& ev : events) {
    events_json.push_back(
        {{"time_s", ev.time_s}, {"actor", ev.actor}, {"action", ev.action}, {"params", ev.params}});
  }
  return nlohmann::json{
      {"vehicles", vehicles_json},
      {"rsu",
       {{"id", rsu.id}, {"position_m", rsu.position_m}, {"rsa", {{"p", rsu.rsa_p}, {"q", rsu.rsa_q}}}}},
      {"road_length_m", road_length_m},
      {"comm_range_m", comm_range_m},
      {"hop_latency_ms", hop_latency_ms},
      {"duration_s", duration_s},
      {"seed", seed},
      {"fault_tolerance", fault_tolerance},
      {"vote_threshold", vote_threshold},
      {"mode", to_string(mode)},
      {"key_refresh_s", key_refresh_s},
      {"initial_balance_eth", initial_balance_eth},
      {"events", events_json}};
}

}  // namespace qvanet::netsim
