#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/attack.hpp"
#include "qvanet/hex.hpp"
#include "qvanet/ledger.hpp"
#include "qvanet/netsim/config.hpp"
#include "qvanet/netsim/events.hpp"
#include "qvanet/netsim/stats.hpp"
#include "qvanet/rng.hpp"

namespace qvanet::netsim {

// One Euler step on a 1-D road with reflective ends.
inline void mobility_step(double& position_m, double& velocity_mps, double dt_s,
                          double road_length_m) {
  position_m += velocity_mps * dt_s;
  while (position_m < 0.0 || position_m > road_length_m) {
    if (position_m < 0.0) {
      position_m = -position_m;
      velocity_mps = -velocity_mps;
    } else {
      position_m = 2.0 * road_length_m - position_m;
      velocity_mps = -velocity_mps;
    }
  }
}

// Closed ball: the boundary distance still counts as reachable.
inline bool in_range(double a_pos_m, double b_pos_m, double comm_range_m) {
  return std::abs(a_pos_m - b_pos_m) <= comm_range_m;
}

struct TrustCsvRow {
  std::uint64_t event_index = 0;
  double time_s = 0;
  std::uint64_t accumulated_trust = 0;
  std::string vehicle_id;
  int vehicle_trust = 0;
  bool blocked = false;
};

inline std::string trust_rows_to_csv(const std::vector<TrustCsvRow>& rows) {
  std::string out = "event_index,sim_time_s,accumulated_trust,vehicle_id,vehicle_trust,blocked\n";
  for (const auto& r : rows) {
    out += std::to_string(r.event_index) + "," + nlohmann::json(r.time_s).dump() + "," +
           std::to_string(r.accumulated_trust) + "," + r.vehicle_id + "," +
           std::to_string(r.vehicle_trust) + "," + (r.blocked ? "1" : "0") + "\n";
  }
  return out;
}

struct MinerRecord {
  std::uint64_t block_index = 0;
  std::string miner_id;
};

struct RunResult {
  EventLog log;
  ledger::Chain chain;
  ledger::Registry registry;
  ledger::ProfileMap profiles;
  ledger::RsuTrustAccumulator accumulator;
  std::map<std::string, NodeStats> stats;
  std::vector<TrustCsvRow> trust_rows;
  std::vector<MinerRecord> miner_history;
  std::map<std::string, ledger::Chain> local_chains;  // per-vehicle ledgers at shutdown
  std::optional<attack::AttackTrace> attack_trace;
  nlohmann::json summary;
};

// Deterministic discrete-event simulation of the five-message transaction
// flow (TR -> ACK -> DM -> TC -> AUTH), chain synchronization, trust
// accounting and the scripted impersonation attack. Every stochastic choice
// draws from the single seeded generator; identical configs produce
// byte-identical event logs.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    duration_ms_ = to_ms(cfg_.duration_s);

    Node rsu;
    rsu.id = cfg_.rsu.id;
    rsu.is_rsu = true;
    rsu.kp = crypto::keygen(cfg_.rsu.rsa_p, cfg_.rsu.rsa_q);
    rsu.position = cfg_.rsu.position_m;
    nodes_.emplace(rsu.id, std::move(rsu));

    for (const auto& spec : cfg_.vehicles) {
      Node v;
      v.id = spec.id;
      v.kp = crypto::keygen(spec.rsa_p, spec.rsa_q);
      v.position = spec.position_m;
      v.velocity = spec.velocity_mps;
      v.fidelity = spec.observation_fidelity;
      nodes_.emplace(v.id, std::move(v));
    }
  }

  // Attack plan supplied outside the scenario file (CLI --attack). Added as a
  // launch_attack event at its trigger time.
  void set_attack_plan(const attack::AttackPlan& plan) {
    plan.validate();
    if (nodes_.count(plan.attacker_id) == 0 || plan.attacker_id == cfg_.rsu.id)
      throw ConfigError("attack.attacker_id", "unknown vehicle id " + plan.attacker_id);
    if (nodes_.count(plan.victim_id) == 0 || plan.victim_id == cfg_.rsu.id)
      throw ConfigError("attack.victim_id", "unknown vehicle id " + plan.victim_id);
    if (plan.trigger_time_s > cfg_.duration_s)
      throw ConfigError("attack.trigger_time_s", "event beyond duration");
    ScenarioEvent ev;
    ev.time_s = plan.trigger_time_s;
    ev.actor = plan.attacker_id;
    ev.action = "launch_attack";
    ev.params = plan.to_json();
    ev.params["victim"] = plan.victim_id;
    cfg_.events.push_back(ev);
  }

  // Fault-injection hook for tests: applied to the chain copy carried by
  // every CRM reply before it leaves the RSU.
  void set_crm_tamper_hook(std::function<void(ledger::Chain&)> hook) {
    crm_tamper_hook_ = std::move(hook);
  }

  RunResult run() {
    // Genesis and RSU enrollment.
    registry_[cfg_.rsu.id] = nodes_.at(cfg_.rsu.id).kp.public_key();
    chain_.blocks.push_back(ledger::make_genesis(cfg_.rsu.id, nodes_.at(cfg_.rsu.id).kp, 0));
    nodes_.at(cfg_.rsu.id).joined = true;
    nodes_.at(cfg_.rsu.id).local_chain = chain_;
    log_.emit(0, EventKind::VehicleJoined, cfg_.rsu.id,
              {{"role", "rsu"}, {"position_m", cfg_.rsu.position_m}});

    // Vehicles join at t=0 unless the scenario delays them with a join event.
    std::map<std::string, std::int64_t> join_time;
    for (const auto& v : cfg_.vehicles) join_time[v.id] = 0;
    for (const auto& ev : cfg_.events) {
      if (ev.action == "join") join_time[ev.actor] = to_ms(ev.time_s);
    }
    for (const auto& v : cfg_.vehicles) {
      schedule(join_time[v.id], [this, id = v.id] { do_join(id); });
    }

    for (const auto& ev : cfg_.events) {
      if (ev.action == "join") continue;
      schedule(to_ms(ev.time_s), [this, ev] { dispatch_scenario_event(ev); });
    }

    while (!queue_.empty()) {
      const Scheduled next = queue_.top();
      if (next.t_ms > duration_ms_) break;
      queue_.pop();
      now_ms_ = next.t_ms;
      next.fn();
    }

    return finalize();
  }

 private:
  struct Node {
    std::string id;
    bool is_rsu = false;
    crypto::RsaKeyPair kp;
    double position = 0;
    double velocity = 0;
    std::int64_t last_move_ms = 0;
    double fidelity = 1.0;
    bool joined = false;
    ledger::Chain local_chain;
    std::uint64_t next_nonce = 0;
    std::vector<Message> observed_dms;
  };

  struct Round {
    ledger::Transaction tx;
    std::set<std::string> eligible;
    std::vector<ledger::Vote> votes;
    bool closed = false;
  };

  struct Scheduled {
    std::int64_t t_ms = 0;
    std::uint64_t order = 0;
    std::function<void()> fn;
  };
  struct ScheduledAfter {
    bool operator()(const Scheduled& a, const Scheduled& b) const {
      return std::tie(a.t_ms, a.order) > std::tie(b.t_ms, b.order);
    }
  };

  struct AttackState {
    attack::AttackPlan plan;
    attack::AttackTrace trace;
    std::set<std::string> forged_ids;
    crypto::PublicKey victim_pub;
    std::uint64_t derived_d = 0;
    bool credentials_ready = false;
    unsigned forged_count = 0;
    bool victim_blocked_by_forgery = false;
    bool halted = false;
    bool double_spend_done = false;
  };

  static std::int64_t to_ms(double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds * 1000.0));
  }

  void schedule(std::int64_t t_ms, std::function<void()> fn) {
    queue_.push(Scheduled{t_ms, schedule_seq_++, std::move(fn)});
  }

  Node& node(const std::string& id) { return nodes_.at(id); }

  bool is_blocked(const std::string& id) const {
    const auto it = profiles_.find(id);
    return it != profiles_.end() && it->second.blocked;
  }

  double position_of(Node& n) {
    const double dt_s = static_cast<double>(now_ms_ - n.last_move_ms) / 1000.0;
    if (dt_s > 0 && !n.is_rsu) {
      mobility_step(n.position, n.velocity, dt_s, cfg_.road_length_m);
    }
    n.last_move_ms = now_ms_;
    return n.position;
  }

  bool nodes_in_range(const std::string& a, const std::string& b) {
    return in_range(position_of(node(a)), position_of(node(b)), cfg_.comm_range_m);
  }

  // ---- transport ----------------------------------------------------------

  static nlohmann::json message_summary(const Message& msg) {
    nlohmann::json d{{"msg_type", to_string(msg.type)}, {"src", msg.src}, {"dst", msg.dst},
                     {"size_bytes", msg.size_bytes}};
    if (msg.tx) d["tx_id"] = msg.tx->tx_id;
    if (msg.vote) d["vote"] = ledger::to_json(*msg.vote);
    if (msg.verdict) {
      d["tx_id"] = msg.verdict->tx_id;
      d["verdict"] = ledger::to_string(msg.verdict->verdict);
    }
    if (msg.block) d["block_index"] = msg.block->index;
    if (msg.chain) d["chain_length"] = msg.chain->size();
    if (!msg.token.empty()) d["token"] = msg.token;
    return d;
  }

  void send_message(Message msg) {
    msg.sent_at_ms = now_ms_;
    log_.emit(now_ms_, EventKind::Sent, msg.src, message_summary(msg));

    std::vector<std::string> recipients;
    if (msg.dst == kBroadcast || msg.dst == kBroadcastVehicles) {
      for (auto& [id, n] : nodes_) {
        if (id == msg.src || !n.joined) continue;
        if (msg.dst == kBroadcastVehicles && n.is_rsu) continue;
        if (nodes_in_range(msg.src, id)) recipients.push_back(id);
      }
    } else if (nodes_.count(msg.dst) > 0 && nodes_.at(msg.dst).joined &&
               nodes_in_range(msg.src, msg.dst)) {
      recipients.push_back(msg.dst);
    }
    for (const auto& r : recipients) {
      schedule(now_ms_ + cfg_.hop_latency_ms, [this, msg, r] { deliver(msg, r); });
    }
  }

  void deliver(const Message& msg, const std::string& recipient) {
    const std::uint64_t seq =
        log_.emit(now_ms_, EventKind::Received, recipient, message_summary(msg));
    const nlohmann::json extra = handle_message(msg, recipient);
    if (!extra.empty()) log_.amend(seq, extra);
  }

  nlohmann::json handle_message(const Message& msg, const std::string& recipient) {
    const bool at_rsu = node(recipient).is_rsu;
    switch (msg.type) {
      case MsgType::TR: return at_rsu ? nlohmann::json{} : handle_tr(msg, recipient);
      case MsgType::ACK: return at_rsu ? handle_ack(msg) : nlohmann::json{};
      case MsgType::DM: return at_rsu ? nlohmann::json{} : handle_dm(msg, recipient);
      case MsgType::TC: return at_rsu ? handle_tc(msg) : nlohmann::json{};
      case MsgType::AUTH: return at_rsu ? nlohmann::json{} : handle_auth(msg, recipient);
      case MsgType::CR: return at_rsu ? handle_cr(msg) : nlohmann::json{};
      case MsgType::CRM: return at_rsu ? nlohmann::json{} : handle_crm(msg, recipient);
      case MsgType::CV: return {};
      case MsgType::CC: return {};  // confirmation; nothing further to do
    }
    return {};
  }

  // ---- enrollment and chain sync ------------------------------------------

  void do_join(const std::string& id) {
    Node& n = node(id);
    n.joined = true;
    n.last_move_ms = now_ms_;
    registry_[id] = n.kp.public_key();
    profiles_[id] = ledger::VehicleTrustProfile{id, 0, 0, false};
    log_.emit(now_ms_, EventKind::VehicleJoined, id,
              {{"position_m", n.position}, {"pubkey", crypto::to_json(n.kp.public_key())}});
    request_chain_sync(id);
  }

  void request_chain_sync(const std::string& id) {
    Message cr;
    cr.type = MsgType::CR;
    cr.src = id;
    cr.dst = cfg_.rsu.id;
    // randomized hashed address token for the request
    const std::uint64_t raw = rng_.next();
    cr.token = to_hex(Sha256::hash(reinterpret_cast<const std::uint8_t*>(&raw), sizeof raw));
    send_message(std::move(cr));
  }

  nlohmann::json handle_cr(const Message& msg) {
    Message crm;
    crm.type = MsgType::CRM;
    crm.src = cfg_.rsu.id;
    crm.dst = msg.src;
    ledger::Chain copy = chain_;
    if (crm_tamper_hook_) crm_tamper_hook_(copy);
    crm.chain = std::move(copy);
    send_message(std::move(crm));
    return {};
  }

  nlohmann::json handle_crm(const Message& msg, const std::string& recipient) {
    if (!msg.chain) return {{"cv", "failed"}, {"reason", "empty chain replay"}};
    // CV: the joiner validates the replayed chain before adopting it.
    if (!ledger::validate_chain(*msg.chain, registry_)) {
      return {{"cv", "failed"}};  // CC withheld
    }
    node(recipient).local_chain = *msg.chain;
    Message cc;
    cc.type = MsgType::CC;
    cc.src = recipient;
    cc.dst = cfg_.rsu.id;
    send_message(std::move(cc));
    return {{"cv", "ok"}};
  }

  nlohmann::json handle_auth(const Message& msg, const std::string& recipient) {
    if (!msg.block) return {};
    Node& n = node(recipient);
    const ledger::Block& blk = *msg.block;
    if (blk.index < n.local_chain.size()) return {};  // already known
    if (blk.index == n.local_chain.size() && !n.local_chain.empty() &&
        blk.prev_hash == n.local_chain.head_hash()) {
      n.local_chain.blocks.push_back(blk);
      return {};
    }
    request_chain_sync(recipient);  // missed at least one block
    return {{"note", "chain_resync_requested"}};
  }

  // ---- the five-message transaction round ---------------------------------

  nlohmann::json handle_tr(const Message& msg, const std::string& recipient) {
    if (!msg.tx) return {{"note", "malformed"}};
    if (is_blocked(recipient)) return {{"note", "blocked_node_stays_silent"}};
    Message ack;
    ack.type = MsgType::ACK;
    ack.src = recipient;
    ack.dst = cfg_.rsu.id;
    ack.tx = msg.tx;
    send_message(std::move(ack));
    return {};
  }

  nlohmann::json handle_ack(const Message& msg) {
    if (!msg.tx) return {{"note", "malformed"}};
    const ledger::Transaction& tx = *msg.tx;
    if (decided_.count(tx.tx_id) || rounds_.count(tx.tx_id))
      return {{"tv", "duplicate_ignored"}};

    // TV step.
    if (is_blocked(tx.sender_id)) {
      decided_.insert(tx.tx_id);
      note_forged_rejection(tx.tx_id, "rejected_blocked_sender");
      return {{"tv", "rejected_blocked_sender"}};
    }
    const ledger::TxStatus status = ledger::verify_transaction(tx, registry_, pending_);
    if (status != ledger::TxStatus::SignatureValid) {
      decided_.insert(tx.tx_id);
      const std::string verdict = "rejected_" + ledger::to_string(status);
      note_forged_rejection(tx.tx_id, verdict);
      return {{"tv", verdict}};
    }

    pending_.push_back(tx);
    Round round;
    round.tx = tx;
    for (const auto& [id, n] : nodes_) {
      if (n.is_rsu || !n.joined || id == tx.sender_id || is_blocked(id)) continue;
      round.eligible.insert(id);
    }
    rounds_[tx.tx_id] = round;

    for (const auto& id : rounds_[tx.tx_id].eligible) {
      send_message(make_dm(cfg_.rsu.id, id, tx, now_ms_));
    }
    return {{"tv", "accepted"}, {"eligible_voters", rounds_[tx.tx_id].eligible.size()}};
  }

  nlohmann::json handle_dm(const Message& msg, const std::string& recipient) {
    if (!msg.tx) return {{"note", "malformed"}};
    Node& n = node(recipient);
    n.observed_dms.push_back(msg);
    if (is_blocked(recipient)) return {{"note", "blocked_node_stays_silent"}};

    const ledger::Transaction& tx = *msg.tx;
    int value = 0;
    if (attack_ && recipient == attack_->plan.attacker_id && attack_->forged_ids.count(tx.tx_id)) {
      value = 0;  // the attacker votes down its own forgery to pin the blame
    } else {
      const bool sig_ok =
          ledger::verify_transaction(tx, registry_, {}) == ledger::TxStatus::SignatureValid;
      const bool observation = rng_.unit() < n.fidelity ? tx.truth_flag : !tx.truth_flag;
      value = (sig_ok && observation) ? 1 : 0;
    }
    send_message(make_tc(recipient, cfg_.rsu.id,
                         ledger::Vote{recipient, tx.tx_id, value}, now_ms_));
    return {};
  }

  nlohmann::json handle_tc(const Message& msg) {
    if (!msg.vote) return {{"note", "malformed"}};
    const ledger::Vote& vote = *msg.vote;
    const auto it = rounds_.find(vote.tx_id);
    if (it == rounds_.end() || it->second.closed) return {{"note", "vote_ignored"}};
    Round& round = it->second;
    if (round.eligible.count(vote.voter_id) == 0 || is_blocked(vote.voter_id))
      return {{"note", "vote_ignored"}};
    for (const auto& v : round.votes) {
      if (v.voter_id == vote.voter_id) return {{"note", "duplicate_vote_ignored"}};
    }
    round.votes.push_back(vote);
    if (round.votes.size() == round.eligible.size()) issue_verdict(round);
    return {};
  }

  void issue_verdict(Round& round) {
    const ledger::ConsensusResult result = ledger::tally_votes(
        round.votes, round.eligible, round.tx.sender_id, cfg_.vote_threshold);

    nlohmann::json detail = ledger::to_json(result);
    detail["kind"] = ledger::to_string(round.tx.kind);
    const bool forged = attack_ && attack_->forged_ids.count(round.tx.tx_id) > 0;
    detail["forged"] = forged;
    const std::uint64_t verdict_seq =
        log_.emit(now_ms_, EventKind::VerdictIssued, cfg_.rsu.id, detail);

    const auto blocked =
        ledger::apply_verdict(profiles_, accumulator_, result, cfg_.fault_tolerance, verdict_seq);
    if (result.verdict == ledger::Verdict::Authenticated) {
      ++authenticated_count_;
    } else {
      ++malicious_count_;
    }

    close_round(round.tx.tx_id);
    append_trust_rows(verdict_seq);

    if (blocked) {
      log_.emit(now_ms_, EventKind::VehicleBlocked, *blocked,
                {{"suspicion_count", profiles_.at(*blocked).suspicion_count},
                 {"triggering_tx", round.tx.tx_id}});
      if (forged && attack_ && *blocked == attack_->plan.victim_id) {
        attack_->victim_blocked_by_forgery = true;
      }
      discard_rounds_blaming(*blocked);
      shrink_rounds_for_blocked(*blocked);
    }

    std::optional<ledger::Block> mined;
    if (result.verdict == ledger::Verdict::Authenticated) {
      const std::string miner = ledger::select_miner(profiles_, rng_);
      last_miner_ = miner;
      const std::uint64_t mine_seq = log_.peek_next_seq();
      const ledger::Block blk = ledger::mine_block(chain_, {round.tx}, miner, node(miner).kp,
                                                   now_ms_, profiles_, accumulator_, mine_seq);
      log_.emit(now_ms_, EventKind::BlockMined, miner,
                {{"block_index", blk.index},
                 {"block_hash", to_hex(ledger::block_hash(blk))},
                 {"tx_ids", nlohmann::json::array({round.tx.tx_id})},
                 {"direct_write", false}});
      miner_history_.push_back({blk.index, miner});
      node(cfg_.rsu.id).local_chain = chain_;
      append_trust_rows(mine_seq);
      mined = blk;
    }

    Message auth;
    auth.type = MsgType::AUTH;
    auth.src = cfg_.rsu.id;
    auth.dst = kBroadcast;
    auth.verdict = result;
    auth.block = mined;
    send_message(std::move(auth));

    if (forged) on_forged_verdict(result);
    if (mined && attack_) on_block_mined(mined->miner_id);
  }

  void close_round(const std::string& tx_id) {
    decided_.insert(tx_id);
    const auto it = rounds_.find(tx_id);
    if (it != rounds_.end()) it->second.closed = true;
    std::erase_if(pending_, [&](const ledger::Transaction& tx) { return tx.tx_id == tx_id; });
  }

  // Open rounds that blame a freshly blocked vehicle are dead: the sender is
  // rejected at TV from now on, so the RSU drops the requests.
  void discard_rounds_blaming(const std::string& blocked_id) {
    for (auto& [tx_id, round] : rounds_) {
      if (!round.closed && round.tx.sender_id == blocked_id) {
        log_.emit(now_ms_, EventKind::Expired, cfg_.rsu.id,
                  {{"tx_id", tx_id}, {"reason", "sender_blocked"}});
        close_round(tx_id);
        note_forged_rejection(tx_id, "discarded_sender_blocked");
      }
    }
  }

  // A vehicle blocked mid-round will never vote; rounds waiting on it drop it
  // from the eligible set (votes it cast while unblocked stand). Rounds that
  // become complete by the shrink resolve immediately.
  void shrink_rounds_for_blocked(const std::string& blocked_id) {
    std::vector<Round*> completed;
    for (auto& [tx_id, round] : rounds_) {
      (void)tx_id;
      if (round.closed || round.eligible.count(blocked_id) == 0) continue;
      bool voted = false;
      for (const auto& v : round.votes) voted = voted || v.voter_id == blocked_id;
      if (voted) continue;
      round.eligible.erase(blocked_id);
      if (!round.eligible.empty() && round.votes.size() == round.eligible.size()) {
        completed.push_back(&round);
      }
    }
    for (auto* round : completed) {
      if (!round->closed) issue_verdict(*round);
    }
  }

  void sweep_expired(const std::string& tx_id) {
    if (decided_.count(tx_id)) return;
    const auto it = rounds_.find(tx_id);
    if (it != rounds_.end() && !it->second.closed) {
      const auto removed = ledger::expire_pending(pending_, now_ms_);
      for (const auto& tx : removed) {
        log_.emit(now_ms_, EventKind::Expired, cfg_.rsu.id,
                  {{"tx_id", tx.tx_id}, {"reason", "consensus_timeout"}});
        close_round(tx.tx_id);
        ++expired_count_;
      }
    } else if (it == rounds_.end()) {
      // the request never reached the RSU at all
      const auto sender = tracked_tr_.find(tx_id);
      log_.emit(now_ms_, EventKind::Expired,
                sender != tracked_tr_.end() ? sender->second : cfg_.rsu.id,
                {{"tx_id", tx_id}, {"reason", "never_reached_consensus"}});
      decided_.insert(tx_id);
      ++expired_count_;
    }
  }

  // ---- scenario actions ----------------------------------------------------

  void dispatch_scenario_event(const ScenarioEvent& ev) {
    if (ev.action == "send_traffic_msg") {
      do_send_traffic(ev.actor, ev.params);
    } else if (ev.action == "launch_attack") {
      do_launch_attack(ev.actor, ev.params);
    } else if (ev.action == "double_spend") {
      do_double_spend(ev.actor, ev.params);
    }
  }

  ledger::Transaction build_own_transaction(const std::string& actor,
                                            const nlohmann::json& params) {
    Node& n = node(actor);
    const std::string kind_str = params.value("kind", "ordinary");
    const std::string payload = params.value("payload", std::string("traffic update"));
    const bool truth = params.value("truth", true);
    const std::uint64_t gas =
        params.value("gas_gwei", ledger::gas_fee(ledger::kGasUnitsPerTx, ledger::kBaseFeeGwei, 0));
    const std::uint64_t nonce = params.contains("nonce")
                                    ? params.at("nonce").get<std::uint64_t>()
                                    : n.next_nonce++;
    return ledger::make_signed_transaction(actor + "-tx" + std::to_string(tx_counter_++), actor,
                                           n.kp, payload, ledger::tx_kind_from_string(kind_str),
                                           truth, gas, nonce, now_ms_);
  }

  void broadcast_tr(const ledger::Transaction& tx, const std::string& physical_sender) {
    tracked_tr_[tx.tx_id] = physical_sender;
    schedule(tx.timestamp_ms + ledger::kExpiryMs + 1,
             [this, id = tx.tx_id] { sweep_expired(id); });
    Message tr;
    tr.type = MsgType::TR;
    tr.src = physical_sender;
    tr.dst = kBroadcastVehicles;
    tr.tx = tx;
    send_message(std::move(tr));
  }

  void do_send_traffic(const std::string& actor, const nlohmann::json& params) {
    if (!node(actor).joined) return;
    broadcast_tr(build_own_transaction(actor, params), actor);
  }

  void do_double_spend(const std::string& actor, const nlohmann::json& params) {
    if (!node(actor).joined || is_blocked(actor)) return;
    const unsigned k = params.value("k", 2u);
    nlohmann::json tx_params = params;
    tx_params["kind"] = "ordinary";
    const ledger::Transaction base = build_own_transaction(actor, tx_params);
    const auto copies = attack::double_spend_copies(base, k);

    if (actor == last_miner_) {
      // Compromised path: the acting validator writes its copies straight
      // into a block, no consensus round at all.
      const std::uint64_t mine_seq = log_.peek_next_seq();
      const ledger::Block blk = ledger::mine_block(chain_, copies, actor, node(actor).kp, now_ms_,
                                                   profiles_, accumulator_, mine_seq);
      nlohmann::json ids = nlohmann::json::array();
      for (const auto& tx : copies) ids.push_back(tx.tx_id);
      log_.emit(now_ms_, EventKind::BlockMined, actor,
                {{"block_index", blk.index},
                 {"block_hash", to_hex(ledger::block_hash(blk))},
                 {"tx_ids", ids},
                 {"direct_write", true}});
      miner_history_.push_back({blk.index, actor});
      append_trust_rows(mine_seq);
      double_spend_mined_ = true;
      if (attack_) attack_->double_spend_done = true;
      return;
    }
    for (const auto& tx : copies) broadcast_tr(tx, actor);
  }

  // ---- the impersonation attack --------------------------------------------

  void do_launch_attack(const std::string& actor, const nlohmann::json& params) {
    attack::AttackPlan plan;
    plan.attacker_id = actor;
    plan.victim_id = params.value("victim", params.value("victim_id", ""));
    plan.trigger_time_s = static_cast<double>(now_ms_) / 1000.0;
    plan.false_payload = params.value("false_payload", plan.false_payload);
    plan.double_spend_count = params.value("double_spend_count", 0u);
    plan.factor_max_attempts = params.value("factor_max_attempts", 20u);
    if (params.contains("timing")) plan.timing = attack::AttackTiming::from_json(params.at("timing"));
    plan.validate();

    attack_ = AttackState{};
    attack_->plan = plan;

    // Step 1: eavesdrop the victim's public key from a disseminated packet.
    const Node& attacker = node(actor);
    std::optional<crypto::PublicKey> pub;
    for (const auto& dm : attacker.observed_dms) {
      if (dm.tx && dm.tx->sender_id == plan.victim_id) {
        pub = attack::eavesdrop(dm);
        break;
      }
    }
    if (!pub) {
      abort_attack("no observed dissemination from victim");
      return;
    }
    attack_->victim_pub = *pub;
    attack_->trace.eavesdropped_pubkey = pub;
    log_.emit(now_ms_, EventKind::AttackStep, actor,
              {{"step", "eavesdrop"},
               {"victim", plan.victim_id},
               {"pubkey", crypto::to_json(*pub)}});

    // Step 2: the PoW time-constraint gate.
    attack_->trace.factor_time_s = plan.timing.factor_delay.sample(rng_);
    attack_->trace.decrypt_time_s = plan.timing.decrypt_delay_s;
    attack_->trace.forge_time_s = plan.timing.forge_delay_s;
    const double estimated = attack_->trace.total_time_s();
    const bool within =
        attack::check_time_constraint(cfg_.mode, estimated, cfg_.key_refresh_s);
    attack_->trace.window_check_passed = within;
    log_.emit(now_ms_, EventKind::AttackStep, actor,
              {{"step", "time_constraint_check"},
               {"mode", to_string(cfg_.mode)},
               {"estimated_total_s", estimated},
               {"key_refresh_s", cfg_.key_refresh_s},
               {"passed", within}});
    if (!within) {
      abort_attack("time constraint exceeded");
      return;
    }

    // Step 3: factor the modulus. The simulated clock is charged from the
    // timing model; the real solve runs now, against the shared generator.
    log_.emit(now_ms_, EventKind::AttackStep, actor,
              {{"step", "factor_start"}, {"modulus", attack_->victim_pub.N}});
    try {
      const auto [d, outcome] =
          attack::forge_credentials(attack_->victim_pub, plan.factor_max_attempts, rng_);
      attack_->derived_d = d;
      attack_->trace.derived_d = d;
      attack_->trace.shor_outcome = outcome;
    } catch (const shor::AttemptsExhaustedError& e) {
      attack_->trace.shor_outcome = e.outcome;
      abort_attack("factoring attempts exhausted");
      return;
    }
    schedule(now_ms_ + to_ms(attack_->trace.factor_time_s), [this] { attack_step_derive(); });
  }

  void attack_step_derive() {
    if (!attack_ || attack_->halted) return;
    attack_->credentials_ready = true;
    nlohmann::json detail{{"step", "credentials_derived"},
                          {"derived_d", attack_->derived_d},
                          {"shor", shor::to_json(*attack_->trace.shor_outcome,
                                                 /*include_wall_time=*/false)}};
    log_.emit(now_ms_, EventKind::AttackStep, attack_->plan.attacker_id, detail);
    schedule(now_ms_ + to_ms(attack_->trace.decrypt_time_s), [this] { attack_step_forge(); });
  }

  void attack_step_forge() {
    if (!attack_ || attack_->halted) return;
    const auto& plan = attack_->plan;
    if (is_blocked(plan.victim_id)) {
      if (attack_->forged_count == 0) {
        abort_attack("attack target lost");
      } else {
        halt_attack("victim blocked");
      }
      return;
    }
    const std::int64_t when = attack_->forged_count == 0 ? to_ms(attack_->trace.forge_time_s) : 0;
    if (when > 0) {
      // first forged packet pays the assembly time before it is broadcast
      schedule(now_ms_ + when, [this] { inject_forged(); });
    } else {
      inject_forged();
    }
  }

  void inject_forged() {
    if (!attack_ || attack_->halted) return;
    const auto& plan = attack_->plan;
    if (is_blocked(plan.victim_id)) {
      halt_attack("victim blocked");
      return;
    }
    const std::string tx_id =
        plan.attacker_id + "-forged" + std::to_string(attack_->forged_count++);
    const ledger::Transaction tx = attack::build_forged_transaction(
        tx_id, plan.victim_id, attack_->victim_pub, attack_->derived_d, plan.false_payload,
        ledger::gas_fee(ledger::kGasUnitsPerTx, ledger::kBaseFeeGwei, 0),
        9000 + attack_->forged_count, now_ms_);
    attack_->forged_ids.insert(tx_id);
    attack_->trace.forged_tx_ids.push_back(tx_id);
    log_.emit(now_ms_, EventKind::AttackStep, plan.attacker_id,
              {{"step", "inject_forged"}, {"tx_id", tx_id}, {"claimed_sender", plan.victim_id}});
    broadcast_tr(tx, plan.attacker_id);
  }

  void on_forged_verdict(const ledger::ConsensusResult& result) {
    if (!attack_ || attack_->halted) return;
    attack_->trace.injection_results.push_back(ledger::to_string(result.verdict) + ":blamed=" +
                                               result.blamed_id);
    if (is_blocked(attack_->plan.victim_id)) {
      halt_attack("victim blocked");
      return;
    }
    // keep pinning blame until the threshold trips
    schedule(now_ms_ + to_ms(attack_->plan.timing.forge_delay_s), [this] { inject_forged(); });
  }

  void on_block_mined(const std::string& miner_id) {
    if (!attack_ || attack_->double_spend_done) return;
    if (miner_id != attack_->plan.attacker_id) return;
    if (!attack_->victim_blocked_by_forgery) return;
    if (attack_->plan.double_spend_count < 2) return;
    // mining power gained: reuse the gas value in as many copies as planned
    schedule(now_ms_ + 1000, [this] {
      if (!attack_ || attack_->double_spend_done) return;
      nlohmann::json params{{"k", attack_->plan.double_spend_count}};
      log_.emit(now_ms_, EventKind::AttackStep, attack_->plan.attacker_id,
                {{"step", "double_spend"}, {"k", attack_->plan.double_spend_count}});
      do_double_spend(attack_->plan.attacker_id, params);
    });
  }

  void note_forged_rejection(const std::string& tx_id, const std::string& status) {
    if (attack_ && attack_->forged_ids.count(tx_id)) {
      attack_->trace.injection_results.push_back(status);
    }
  }

  void abort_attack(const std::string& reason) {
    attack_->trace.aborted = true;
    attack_->trace.abort_reason = reason;
    attack_->halted = true;
    log_.emit(now_ms_, EventKind::AttackStep, attack_->plan.attacker_id,
              {{"step", "abort"}, {"reason", reason}});
  }

  void halt_attack(const std::string& reason) {
    attack_->halted = true;
    log_.emit(now_ms_, EventKind::AttackStep, attack_->plan.attacker_id,
              {{"step", "halt"}, {"reason", reason}});
  }

  // ---- bookkeeping ----------------------------------------------------------

  void append_trust_rows(std::uint64_t event_index) {
    for (const auto& [id, profile] : profiles_) {
      TrustCsvRow row;
      row.event_index = event_index;
      row.time_s = static_cast<double>(now_ms_) / 1000.0;
      row.accumulated_trust = accumulator_.accumulated;
      row.vehicle_id = id;
      row.vehicle_trust = profile.reported_trust();
      row.blocked = profile.blocked;
      trust_rows_.push_back(row);
    }
  }

  RunResult finalize() {
    if (attack_) {
      // the trace rides in the event log alongside the step records
      log_.emit(now_ms_, EventKind::AttackStep, attack_->plan.attacker_id,
                {{"step", "trace"},
                 {"trace", attack_->trace.to_json(/*include_wall_time=*/false)}});
    }

    RunResult result;
    result.stats = collect_stats(log_.events());

    std::uint64_t sent = 0, received = 0;
    for (const auto& [id, s] : result.stats) {
      sent += s.transmitted;
      received += s.received;
    }
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [id, s] : result.stats) {
      rates[id] = {{"sent_per_100s", static_cast<double>(s.transmitted) * 100.0 / cfg_.duration_s},
                   {"received_per_100s",
                    static_cast<double>(s.received) * 100.0 / cfg_.duration_s}};
    }

    nlohmann::json blocked = nlohmann::json::array();
    for (const auto& [id, p] : profiles_) {
      if (p.blocked) blocked.push_back(id);
    }
    nlohmann::json miners = nlohmann::json::array();
    for (const auto& m : miner_history_) {
      miners.push_back({{"block_index", m.block_index}, {"miner_id", m.miner_id}});
    }
    nlohmann::json vehicle_trust = nlohmann::json::object();
    for (const auto& [id, p] : profiles_) {
      vehicle_trust[id] = {{"trust", p.reported_trust()},
                           {"raw_trust", p.trust},
                           {"suspicion_count", p.suspicion_count},
                           {"blocked", p.blocked}};
    }

    const std::uint64_t fee = ledger::gas_fee(ledger::kGasUnitsPerTx, ledger::kBaseFeeGwei, 0);
    nlohmann::json summary{
        {"schema_version", 1},
        {"seed", cfg_.seed},
        {"mode", to_string(cfg_.mode)},
        {"config", cfg_.to_json()},
        {"totals",
         {{"events", log_.events().size()}, {"messages_sent", sent}, {"messages_received", received}}},
        {"message_rates", rates},
        {"verdicts", {{"authenticated", authenticated_count_}, {"malicious", malicious_count_}}},
        {"expired", expired_count_},
        {"blocked_vehicles", blocked},
        {"miner_history", miners},
        {"vehicle_trust", vehicle_trust},
        {"final_accumulated_trust", accumulator_.accumulated},
        {"chain_length", chain_.size()},
        {"chain_valid", ledger::validate_chain(chain_, registry_)},
        {"double_spend_mined", double_spend_mined_},
        {"gas",
         {{"fee_gwei_per_tx", fee},
          {"fee_eth_per_tx", static_cast<double>(fee) / static_cast<double>(ledger::kGweiPerEth)},
          {"initial_balance_eth", cfg_.initial_balance_eth},
          {"supported_tx_count",
           ledger::supported_transaction_count(cfg_.initial_balance_eth, fee)}}}};

    if (attack_) {
      summary["attack"] = {{"launched", true},
                           {"plan", attack_->plan.to_json()},
                           {"aborted", attack_->trace.aborted},
                           {"credentials_forged", attack_->credentials_ready},
                           {"forged_tx_count", attack_->forged_count},
                           {"victim_blocked", is_blocked(attack_->plan.victim_id)},
                           {"succeeded", attack_->victim_blocked_by_forgery},
                           {"trace", attack_->trace.to_json(/*include_wall_time=*/false)}};
      result.attack_trace = attack_->trace;
    } else {
      summary["attack"] = {{"launched", false}};
    }

    result.log = log_;
    result.chain = chain_;
    result.registry = registry_;
    result.profiles = profiles_;
    result.accumulator = accumulator_;
    result.trust_rows = trust_rows_;
    result.miner_history = miner_history_;
    for (const auto& [id, n] : nodes_) {
      if (!n.is_rsu) result.local_chains[id] = n.local_chain;
    }
    result.summary = std::move(summary);
    return result;
  }

  SimConfig cfg_;
  DetRng rng_;
  std::int64_t duration_ms_ = 0;
  std::int64_t now_ms_ = 0;
  std::uint64_t schedule_seq_ = 0;
  std::uint64_t tx_counter_ = 0;

  std::priority_queue<Scheduled, std::vector<Scheduled>, ScheduledAfter> queue_;
  std::map<std::string, Node> nodes_;
  EventLog log_;

  ledger::Registry registry_;
  ledger::Chain chain_;
  ledger::ProfileMap profiles_;
  ledger::RsuTrustAccumulator accumulator_;
  std::vector<ledger::Transaction> pending_;
  std::map<std::string, Round> rounds_;
  std::set<std::string> decided_;
  std::map<std::string, std::string> tracked_tr_;  // tx_id -> physical sender
  std::string last_miner_;
  std::vector<MinerRecord> miner_history_;
  std::vector<TrustCsvRow> trust_rows_;
  std::optional<AttackState> attack_;
  std::function<void(ledger::Chain&)> crm_tamper_hook_;

  unsigned authenticated_count_ = 0;
  unsigned malicious_count_ = 0;
  unsigned expired_count_ = 0;
  bool double_spend_mined_ = false;
};

}  // namespace qvanet::netsim
