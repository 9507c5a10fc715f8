#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/netsim/config.hpp"
#include "qvanet/netsim/events.hpp"
#include "qvanet/rng.hpp"
#include "qvanet/rsa.hpp"
#include "qvanet/shor.hpp"

// The impersonation pipeline: eavesdrop a disseminated public key, factor its
// modulus, derive the private exponent, and sign false messages that the
// ledger attributes to the victim.
namespace qvanet::attack {

struct DelaySpec {
  enum class Kind { constant, uniform, poisson };
  Kind kind = Kind::constant;
  double mean = 10.4;  // constant value / poisson mean
  double lo = 0.0, hi = 0.0;

  double sample(DetRng& rng) const {
    switch (kind) {
      case Kind::constant:
        return mean;
      case Kind::uniform:
        return lo + rng.unit() * (hi - lo);
      case Kind::poisson: {
        // Knuth's method; fine at the means this model uses.
        const double limit = std::exp(-mean);
        double p = 1.0;
        std::uint64_t k = 0;
        do {
          ++k;
          p *= rng.unit();
        } while (p > limit);
        return static_cast<double>(k - 1);
      }
    }
    return mean;
  }

  static DelaySpec constant(double value) {
    DelaySpec d;
    d.kind = Kind::constant;
    d.mean = value;
    return d;
  }

  static DelaySpec from_json(const nlohmann::json& j) {
    DelaySpec d;
    if (j.is_number()) {
      d.kind = Kind::constant;
      d.mean = j.get<double>();
    } else if (j.is_object() && j.contains("constant")) {
      d.kind = Kind::constant;
      d.mean = j.at("constant").get<double>();
    } else if (j.is_object() && j.contains("poisson")) {
      d.kind = Kind::poisson;
      d.mean = j.at("poisson").get<double>();
    } else if (j.is_object() && j.contains("uniform")) {
      const auto& u = j.at("uniform");
      if (!u.is_array() || u.size() != 2)
        throw std::invalid_argument("uniform delay must be [lo, hi]");
      d.kind = Kind::uniform;
      d.lo = u[0].get<double>();
      d.hi = u[1].get<double>();
      if (d.hi < d.lo) throw std::invalid_argument("uniform delay has hi < lo");
    } else {
      throw std::invalid_argument("delay must be a number or {constant|poisson|uniform: ...}");
    }
    if (d.mean < 0 || d.lo < 0) throw std::invalid_argument("delays must be nonnegative");
    return d;
  }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::constant: return nlohmann::json{{"constant", mean}};
      case Kind::uniform: return nlohmann::json{{"uniform", {lo, hi}}};
      case Kind::poisson: return nlohmann::json{{"poisson", mean}};
    }
    return nullptr;
  }
};

// Defaults reproduce the 115-second end-to-end budget: 10.4 s of factoring
// plus 104.6 s for decrypting traffic and assembling the forged packet.
struct AttackTiming {
  DelaySpec factor_delay = DelaySpec::constant(10.4);
  double decrypt_delay_s = 52.3;
  double forge_delay_s = 52.3;

  static AttackTiming from_json(const nlohmann::json& j) {
    AttackTiming t;
    if (j.contains("factor_delay_s")) t.factor_delay = DelaySpec::from_json(j.at("factor_delay_s"));
    t.decrypt_delay_s = j.value("decrypt_delay_s", t.decrypt_delay_s);
    t.forge_delay_s = j.value("forge_delay_s", t.forge_delay_s);
    if (t.decrypt_delay_s < 0 || t.forge_delay_s < 0)
      throw std::invalid_argument("delays must be nonnegative");
    return t;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"factor_delay_s", factor_delay.to_json()},
                          {"decrypt_delay_s", decrypt_delay_s},
                          {"forge_delay_s", forge_delay_s}};
  }
};

struct AttackPlan {
  std::string attacker_id;
  std::string victim_id;
  double trigger_time_s = 0;
  std::string false_payload = "false traffic crash";
  unsigned double_spend_count = 0;  // 0 disables; otherwise >= 2
  unsigned factor_max_attempts = 20;
  AttackTiming timing;

  void validate() const {
    if (attacker_id.empty() || victim_id.empty())
      throw std::invalid_argument("attack plan needs attacker_id and victim_id");
    if (attacker_id == victim_id) throw std::invalid_argument("attacker cannot target itself");
    if (trigger_time_s < 0) throw std::invalid_argument("trigger_time_s must be >= 0");
    if (double_spend_count == 1)
      throw std::invalid_argument("double_spend_count must be 0 or >= 2");
    if (false_payload.size() > ledger::kMaxPayloadBytes)
      throw std::invalid_argument("false_payload exceeds 100 bytes");
  }

  static AttackPlan from_json(const nlohmann::json& j) {
    AttackPlan p;
    p.attacker_id = j.value("attacker_id", "");
    p.victim_id = j.value("victim_id", j.value("victim", ""));
    p.trigger_time_s = j.value("trigger_time_s", 0.0);
    p.false_payload = j.value("false_payload", p.false_payload);
    p.double_spend_count = j.value("double_spend_count", 0u);
    p.factor_max_attempts = j.value("factor_max_attempts", 20u);
    if (j.contains("timing")) p.timing = AttackTiming::from_json(j.at("timing"));
    p.validate();
    return p;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"attacker_id", attacker_id},
                          {"victim_id", victim_id},
                          {"trigger_time_s", trigger_time_s},
                          {"false_payload", false_payload},
                          {"double_spend_count", double_spend_count},
                          {"factor_max_attempts", factor_max_attempts},
                          {"timing", timing.to_json()}};
  }
};

struct AttackTrace {
  std::optional<crypto::PublicKey> eavesdropped_pubkey;
  std::optional<shor::ShorOutcome> shor_outcome;
  std::optional<std::uint64_t> derived_d;
  std::vector<std::string> forged_tx_ids;
  std::vector<std::string> injection_results;
  double factor_time_s = 0;   // simulated-time charges from the timing model;
  double decrypt_time_s = 0;  // the real wall clock of the factoring run lives
  double forge_time_s = 0;    // in shor_outcome.wall_time_s
  bool window_check_passed = false;
  bool aborted = false;
  std::string abort_reason;

  double total_time_s() const { return factor_time_s + decrypt_time_s + forge_time_s; }

  nlohmann::json to_json(bool include_wall_time = true) const {
    nlohmann::json j{{"factor_time_s", factor_time_s},
                     {"decrypt_time_s", decrypt_time_s},
                     {"forge_time_s", forge_time_s},
                     {"total_time_s", total_time_s()},
                     {"window_check_passed", window_check_passed},
                     {"aborted", aborted},
                     {"forged_tx_ids", forged_tx_ids},
                     {"injection_results", injection_results}};
    if (!abort_reason.empty()) j["abort_reason"] = abort_reason;
    if (eavesdropped_pubkey) j["eavesdropped_pubkey"] = crypto::to_json(*eavesdropped_pubkey);
    if (derived_d) j["derived_d"] = *derived_d;
    if (shor_outcome) j["shor"] = shor::to_json(*shor_outcome, include_wall_time);
    return j;
  }
};

// Extracts the original sender's public key from a disseminated transaction.
inline crypto::PublicKey eavesdrop(const netsim::Message& dm) {
  if (dm.type != netsim::MsgType::DM || !dm.tx)
    throw std::runtime_error("eavesdrop needs a DM carrying a transaction");
  return dm.tx->sender_pubkey;
}

// PoS imposes no refresh window; PoW requires finishing inside it.
inline bool check_time_constraint(netsim::ConsensusMode mode, double estimated_total_s,
                                  double key_refresh_s) {
  if (mode == netsim::ConsensusMode::PoS) return true;
  return estimated_total_s < key_refresh_s;
}

// Factors the victim's modulus and inverts the public exponent.
// AttemptsExhaustedError propagates to the caller, which aborts the attack.
inline std::pair<std::uint64_t, shor::ShorOutcome> forge_credentials(
    const crypto::PublicKey& pubkey, unsigned max_attempts, DetRng& rng) {
  shor::FactoringConfig cfg;
  cfg.modulus = pubkey.N;
  cfg.max_attempts = max_attempts;
  const shor::ShorOutcome outcome = shor::factor(pubkey.N, cfg, rng);
  const auto [p, q] = *outcome.factors;
  return {crypto::derive_private_exponent(pubkey.e, p, q), outcome};
}

// A traffic-crash transaction claiming the victim's identity, signed with the
// forged exponent. Indistinguishable from the victim's own signature at TV.
inline ledger::Transaction build_forged_transaction(std::string tx_id,
                                                    const std::string& victim_id,
                                                    const crypto::PublicKey& victim_pubkey,
                                                    std::uint64_t forged_d, std::string payload,
                                                    std::uint64_t gas_gwei, std::uint64_t nonce,
                                                    std::int64_t timestamp_ms) {
  if (payload.size() > ledger::kMaxPayloadBytes)
    throw std::invalid_argument("payload exceeds 100 bytes");
  ledger::Transaction tx;
  tx.tx_id = std::move(tx_id);
  tx.sender_id = victim_id;
  tx.sender_pubkey = victim_pubkey;
  tx.payload = std::move(payload);
  tx.kind = ledger::TxKind::traffic_crash;
  tx.truth_flag = false;  // the report is fabricated
  tx.gas_gwei = gas_gwei;
  tx.nonce = nonce;
  tx.timestamp_ms = timestamp_ms;
  const std::string bytes = tx.signable_bytes();
  tx.digest = crypto::digest(bytes);
  tx.signature = crypto::sign_with_exponent(bytes, forged_d, victim_pubkey.N);
  return tx;
}

// k transactions sharing (pubkey, nonce, gas) with distinct ids. The shared
// signature stays valid because tx_id is outside the signed bytes.
inline std::vector<ledger::Transaction> double_spend_copies(const ledger::Transaction& tx,
                                                            unsigned k) {
  if (k < 2) throw std::invalid_argument("double spend needs k >= 2");
  std::vector<ledger::Transaction> copies;
  copies.reserve(k);
  for (unsigned i = 0; i < k; ++i) {
    ledger::Transaction copy = tx;
    copy.tx_id = tx.tx_id + "-ds" + std::to_string(i);
    copies.push_back(std::move(copy));
  }
  return copies;
}

// Total computational time: factorization + message decryption + forged
// message creation.
inline double attack_timing(const AttackTrace& trace) { return trace.total_time_s(); }

}  // namespace qvanet::attack
