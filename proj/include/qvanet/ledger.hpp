#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/hex.hpp"
#include "qvanet/rng.hpp"
#include "qvanet/rsa.hpp"
#include "qvanet/sha256.hpp"

// The trust-chain ledger: hash-linked blocks of signed transactions, majority
// voting, and the two trust books — the RSU accumulator (+5 authenticated,
// +10 malicious identified, +20 mined) and per-vehicle trust profiles.
namespace qvanet::ledger {

using BlockHash = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kMaxPayloadBytes = 100;
inline constexpr std::int64_t kExpiryMs = 600'000;  // requests are discarded after 10 minutes
inline constexpr std::uint64_t kGasUnitsPerTx = 21'000;
inline constexpr std::uint64_t kBaseFeeGwei = 10;

enum class TxKind { ordinary, traffic_crash };

inline std::string to_string(TxKind k) {
  return k == TxKind::ordinary ? "ordinary" : "traffic_crash";
}

inline TxKind tx_kind_from_string(const std::string& s) {
  if (s == "ordinary") return TxKind::ordinary;
  if (s == "traffic_crash") return TxKind::traffic_crash;
  throw std::invalid_argument("unknown transaction kind: " + s);
}

struct Transaction {
  std::string tx_id;
  std::string sender_id;  // claimed signer identity
  crypto::PublicKey sender_pubkey;
  std::string payload;  // <= 100 bytes
  TxKind kind = TxKind::ordinary;
  bool truth_flag = true;  // scenario ground truth; never read by consensus logic
  std::uint64_t gas_gwei = kGasUnitsPerTx * kBaseFeeGwei;
  std::uint64_t nonce = 0;
  std::int64_t timestamp_ms = 0;
  crypto::MessageDigest digest{};
  crypto::SymbolSignature signature;

  // The byte string the sender signs. tx_id stays outside so duplicate
  // submissions (double spends) are distinct transactions over one signature.
  std::string signable_bytes() const {
    nlohmann::json j{{"gas_gwei", gas_gwei},        {"kind", to_string(kind)},
                     {"nonce", nonce},              {"payload", to_hex(payload)},
                     {"sender_id", sender_id},      {"timestamp_ms", timestamp_ms}};
    return j.dump();
  }
};

// Canonical wire form: UTF-8 JSON, lexicographically sorted keys, no
// whitespace, integers in decimal, bytes as lowercase hex. truth_flag is
// scenario metadata, not ledger content, and is not serialized.
inline nlohmann::json to_canonical_json(const Transaction& tx) {
  return nlohmann::json{{"digest", to_hex(tx.digest)},
                        {"gas_gwei", tx.gas_gwei},
                        {"kind", to_string(tx.kind)},
                        {"nonce", tx.nonce},
                        {"payload", to_hex(tx.payload)},
                        {"sender_id", tx.sender_id},
                        {"sender_pubkey", crypto::to_json(tx.sender_pubkey)},
                        {"signature", tx.signature},
                        {"timestamp_ms", tx.timestamp_ms},
                        {"tx_id", tx.tx_id}};
}

inline Transaction make_signed_transaction(std::string tx_id, std::string sender_id,
                                           const crypto::RsaKeyPair& kp, std::string payload,
                                           TxKind kind, bool truth_flag, std::uint64_t gas_gwei,
                                           std::uint64_t nonce, std::int64_t timestamp_ms) {
  if (payload.size() > kMaxPayloadBytes) throw std::invalid_argument("payload exceeds 100 bytes");
  if (gas_gwei == 0) throw std::invalid_argument("gas must be positive");
  Transaction tx;
  tx.tx_id = std::move(tx_id);
  tx.sender_id = std::move(sender_id);
  tx.sender_pubkey = kp.public_key();
  tx.payload = std::move(payload);
  tx.kind = kind;
  tx.truth_flag = truth_flag;
  tx.gas_gwei = gas_gwei;
  tx.nonce = nonce;
  tx.timestamp_ms = timestamp_ms;
  const std::string bytes = tx.signable_bytes();
  tx.digest = crypto::digest(bytes);
  tx.signature = crypto::sign(bytes, kp);
  return tx;
}

struct Block {
  std::uint64_t index = 0;
  BlockHash prev_hash{};
  std::vector<Transaction> transactions;
  std::string miner_id;
  crypto::PublicKey miner_pubkey;
  crypto::SymbolSignature miner_signature;  // over the block digest
  std::int64_t timestamp_ms = 0;
};

namespace detail {

inline nlohmann::json block_hash_fields(const Block& b) {
  nlohmann::json txs = nlohmann::json::array();
  for (const auto& tx : b.transactions) txs.push_back(to_canonical_json(tx));
  return nlohmann::json{{"index", b.index},
                        {"miner_id", b.miner_id},
                        {"miner_pubkey", crypto::to_json(b.miner_pubkey)},
                        {"prev_hash", to_hex(b.prev_hash)},
                        {"timestamp_ms", b.timestamp_ms},
                        {"transactions", txs}};
}

}  // namespace detail

// SHA-256 over the canonical serialization (miner signature excluded: it is
// computed over this digest).
inline BlockHash block_hash(const Block& b) {
  return Sha256::hash(detail::block_hash_fields(b).dump());
}

inline nlohmann::json to_canonical_json(const Block& b) {
  nlohmann::json j = detail::block_hash_fields(b);
  j["miner_signature"] = b.miner_signature;
  return j;
}

inline std::string digest_as_bytes(const BlockHash& h) {
  return std::string(reinterpret_cast<const char*>(h.data()), h.size());
}

struct Chain {
  std::vector<Block> blocks;

  bool empty() const { return blocks.empty(); }
  std::size_t size() const { return blocks.size(); }
  const Block& head() const {
    if (blocks.empty()) throw std::logic_error("chain is empty");
    return blocks.back();
  }
  BlockHash head_hash() const { return block_hash(head()); }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : blocks) out.push_back(to_canonical_json(b));
    return out;
  }
};

inline Block make_genesis(const std::string& creator_id, const crypto::RsaKeyPair& kp,
                          std::int64_t timestamp_ms) {
  Block b;
  b.index = 0;
  b.prev_hash.fill(0);
  b.miner_id = creator_id;
  b.miner_pubkey = kp.public_key();
  b.timestamp_ms = timestamp_ms;
  b.miner_signature = crypto::sign(digest_as_bytes(block_hash(b)), kp);
  return b;
}

using Registry = std::map<std::string, crypto::PublicKey>;

enum class TxStatus { SignatureValid, SignatureInvalid, DoubleSpend, UnknownSender };

inline std::string to_string(TxStatus s) {
  switch (s) {
    case TxStatus::SignatureValid: return "SignatureValid";
    case TxStatus::SignatureInvalid: return "SignatureInvalid";
    case TxStatus::DoubleSpend: return "DoubleSpend";
    case TxStatus::UnknownSender: return "UnknownSender";
  }
  return "?";
}

// True iff pending holds a distinct transaction with the same
// (sender_pubkey, nonce, gas_gwei) triple.
inline bool detect_double_spend(const std::vector<Transaction>& pending, const Transaction& tx) {
  return std::any_of(pending.begin(), pending.end(), [&](const Transaction& other) {
    return other.tx_id != tx.tx_id && other.sender_pubkey == tx.sender_pubkey &&
           other.nonce == tx.nonce && other.gas_gwei == tx.gas_gwei;
  });
}

// The TV step: authentication of a claimed sender against the registry plus
// the double-spend screen.
inline TxStatus verify_transaction(const Transaction& tx, const Registry& registry,
                                   const std::vector<Transaction>& pending) {
  const auto it = registry.find(tx.sender_id);
  if (it == registry.end()) return TxStatus::UnknownSender;
  if (detect_double_spend(pending, tx)) return TxStatus::DoubleSpend;
  if (!(tx.sender_pubkey == it->second)) return TxStatus::SignatureInvalid;
  const std::string bytes = tx.signable_bytes();
  if (tx.digest != crypto::digest(bytes)) return TxStatus::SignatureInvalid;
  if (!crypto::verify(bytes, tx.signature, it->second)) return TxStatus::SignatureInvalid;
  return TxStatus::SignatureValid;
}

struct Vote {
  std::string voter_id;
  std::string tx_id;
  int value = 0;  // 1 trusted, 0 not trusted
};

inline nlohmann::json to_json(const Vote& v) {
  return nlohmann::json{{"tx_id", v.tx_id}, {"value", v.value}, {"voter_id", v.voter_id}};
}

enum class Verdict { Authenticated, Malicious };

inline std::string to_string(Verdict v) {
  return v == Verdict::Authenticated ? "Authenticated" : "Malicious";
}

struct ConsensusResult {
  std::string tx_id;
  std::vector<Vote> votes;
  unsigned ones = 0;
  unsigned eligible = 0;
  Verdict verdict = Verdict::Malicious;
  std::string blamed_id;  // the claimed signer
};

inline nlohmann::json to_json(const ConsensusResult& r) {
  nlohmann::json votes = nlohmann::json::array();
  for (const auto& v : r.votes) votes.push_back(to_json(v));
  return nlohmann::json{{"blamed_id", r.blamed_id}, {"eligible", r.eligible},
                        {"ones", r.ones},           {"tx_id", r.tx_id},
                        {"verdict", to_string(r.verdict)}, {"votes", votes}};
}

// Majority voting over the eligible set (unblocked vehicles minus the claimed
// signer; the RSU never votes). Authenticated needs ones strictly above
// threshold * eligible; the default 0.5 is a strict majority with ties
// counting as Malicious. The threshold is a hook for stricter policies.
inline ConsensusResult tally_votes(const std::vector<Vote>& votes,
                                   const std::set<std::string>& eligible_voters,
                                   const std::string& blamed_id, double threshold = 0.5) {
  if (!(threshold >= 0.0) || !(threshold < 1.0))
    throw std::invalid_argument("vote threshold must lie in [0, 1)");
  if (eligible_voters.count(blamed_id) > 0)
    throw std::invalid_argument("claimed signer cannot be an eligible voter");
  ConsensusResult result;
  result.blamed_id = blamed_id;
  result.eligible = static_cast<unsigned>(eligible_voters.size());
  std::set<std::string> seen;
  for (const auto& v : votes) {
    if (eligible_voters.count(v.voter_id) == 0)
      throw std::invalid_argument("vote from ineligible voter: " + v.voter_id);
    if (!seen.insert(v.voter_id).second)
      throw std::invalid_argument("duplicate voter: " + v.voter_id);
    if (v.value != 0 && v.value != 1) throw std::invalid_argument("vote value must be 0 or 1");
    if (!result.votes.empty() && v.tx_id != result.votes.front().tx_id)
      throw std::invalid_argument("votes reference different transactions");
    result.votes.push_back(v);
    result.ones += static_cast<unsigned>(v.value);
  }
  if (votes.size() != eligible_voters.size())
    throw std::invalid_argument("expected one vote per eligible voter");
  if (!votes.empty()) result.tx_id = votes.front().tx_id;
  result.verdict = (static_cast<double>(result.ones) >
                    threshold * static_cast<double>(result.eligible))
                       ? Verdict::Authenticated
                       : Verdict::Malicious;
  return result;
}

struct VehicleTrustProfile {
  std::string vehicle_id;
  int trust = 0;
  unsigned suspicion_count = 0;
  bool blocked = false;

  int reported_trust() const { return blocked ? 0 : trust; }
};

enum class TrustCause { authenticated, malicious_identified, mined };

inline std::string to_string(TrustCause c) {
  switch (c) {
    case TrustCause::authenticated: return "authenticated";
    case TrustCause::malicious_identified: return "malicious_identified";
    case TrustCause::mined: return "mined";
  }
  return "?";
}

inline unsigned trust_delta(TrustCause c) {
  switch (c) {
    case TrustCause::authenticated: return 5;
    case TrustCause::malicious_identified: return 10;
    case TrustCause::mined: return 20;
  }
  return 0;
}

struct TrustIncrement {
  std::uint64_t event_index = 0;
  unsigned delta = 0;
  TrustCause cause = TrustCause::authenticated;
};

// The RSU's accumulated (vertical) trust book. Strictly nondecreasing; every
// step is one of the three fixed offsets.
struct RsuTrustAccumulator {
  std::uint64_t accumulated = 0;
  std::vector<TrustIncrement> increments;

  void record(TrustCause cause, std::uint64_t event_index) {
    const unsigned delta = trust_delta(cause);
    accumulated += delta;
    increments.push_back(TrustIncrement{event_index, delta, cause});
  }
};

using ProfileMap = std::map<std::string, VehicleTrustProfile>;

// Applies a consensus verdict to both trust books. Authenticated: +5 to the
// accumulator, +1 to the signer. Malicious: +10 to the accumulator, -1 and a
// suspicion mark to the blamed signer, +1 to every voter that voted 0; at F
// suspicions the vehicle is blocked and reports trust 0 from then on.
// Returns the blocked vehicle id when the verdict tripped the threshold.
inline std::optional<std::string> apply_verdict(ProfileMap& profiles,
                                                RsuTrustAccumulator& accumulator,
                                                const ConsensusResult& result,
                                                unsigned fault_tolerance,
                                                std::uint64_t event_index) {
  const auto it = profiles.find(result.blamed_id);
  if (it == profiles.end())
    throw std::invalid_argument("verdict blames an unregistered vehicle: " + result.blamed_id);
  VehicleTrustProfile& blamed = it->second;
  if (blamed.blocked)
    throw std::logic_error("verdict issued against an already-blocked vehicle");

  if (result.verdict == Verdict::Authenticated) {
    accumulator.record(TrustCause::authenticated, event_index);
    blamed.trust += 1;
    return std::nullopt;
  }

  accumulator.record(TrustCause::malicious_identified, event_index);
  blamed.trust -= 1;
  blamed.suspicion_count += 1;
  for (const auto& v : result.votes) {
    if (v.value == 0) {
      const auto voter = profiles.find(v.voter_id);
      if (voter != profiles.end()) voter->second.trust += 1;
    }
  }
  if (blamed.suspicion_count >= fault_tolerance) {
    blamed.blocked = true;
    return blamed.vehicle_id;
  }
  return std::nullopt;
}

// Highest stake wins; ties among the leaders are broken uniformly by the
// seeded generator. Blocked vehicles are not candidates.
inline std::string select_miner(const ProfileMap& profiles, DetRng& rng) {
  std::vector<const VehicleTrustProfile*> candidates;
  for (const auto& [id, profile] : profiles) {
    (void)id;
    if (!profile.blocked) candidates.push_back(&profile);
  }
  if (candidates.empty()) throw std::runtime_error("select_miner: every vehicle is blocked");
  int best = candidates.front()->trust;
  for (const auto* c : candidates) best = std::max(best, c->trust);
  std::vector<const VehicleTrustProfile*> leaders;
  for (const auto* c : candidates) {
    if (c->trust == best) leaders.push_back(c);
  }
  return leaders[rng.below(leaders.size())]->vehicle_id;  // map order keeps this deterministic
}

// Appends a block of already-verified transactions and pays the mining offset.
inline Block mine_block(Chain& chain, std::vector<Transaction> txs, const std::string& miner_id,
                        const crypto::RsaKeyPair& miner_kp, std::int64_t timestamp_ms,
                        const ProfileMap& profiles, RsuTrustAccumulator& accumulator,
                        std::uint64_t event_index) {
  if (chain.empty()) throw std::logic_error("mine_block: chain has no genesis");
  if (txs.empty()) throw std::invalid_argument("mine_block: nothing to mine");
  const auto profile = profiles.find(miner_id);
  if (profile != profiles.end() && profile->second.blocked)
    throw std::invalid_argument("mine_block: miner is blocked");

  Block b;
  b.index = chain.blocks.size();
  b.prev_hash = chain.head_hash();
  b.transactions = std::move(txs);
  b.miner_id = miner_id;
  b.miner_pubkey = miner_kp.public_key();
  b.timestamp_ms = timestamp_ms;
  b.miner_signature = crypto::sign(digest_as_bytes(block_hash(b)), miner_kp);
  chain.blocks.push_back(b);
  accumulator.record(TrustCause::mined, event_index);
  return b;
}

// Removes pending transactions older than the 10-minute window (strictly).
inline std::vector<Transaction> expire_pending(std::vector<Transaction>& pending,
                                               std::int64_t now_ms) {
  std::vector<Transaction> expired;
  auto cut = std::stable_partition(pending.begin(), pending.end(), [&](const Transaction& tx) {
    return now_ms - tx.timestamp_ms <= kExpiryMs;
  });
  expired.assign(std::make_move_iterator(cut), std::make_move_iterator(pending.end()));
  pending.erase(cut, pending.end());
  return expired;
}

inline std::uint64_t gas_fee(std::uint64_t gas_units, std::uint64_t base_fee_gwei,
                             std::uint64_t priority_fee_gwei) {
  return gas_units * (base_fee_gwei + priority_fee_gwei);
}

inline constexpr std::uint64_t kGweiPerEth = 1'000'000'000;

inline std::uint64_t supported_transaction_count(double balance_eth, std::uint64_t fee_gwei) {
  if (fee_gwei == 0) throw std::invalid_argument("fee must be positive");
  const auto balance_gwei =
      static_cast<std::uint64_t>(balance_eth * static_cast<double>(kGweiPerEth));
  return balance_gwei / fee_gwei;
}

// Full-chain verification: genesis shape, hash links, and miner signatures
// (checked against the registry, not the embedded key alone).
inline bool validate_chain(const Chain& chain, const Registry& registry) {
  if (chain.empty()) return false;
  const Block& genesis = chain.blocks.front();
  if (genesis.index != 0 || !genesis.transactions.empty()) return false;
  if (genesis.prev_hash != BlockHash{}) return false;

  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    const Block& b = chain.blocks[i];
    if (b.index != i) return false;
    if (i > 0 && b.prev_hash != block_hash(chain.blocks[i - 1])) return false;
    const auto key = registry.find(b.miner_id);
    if (key == registry.end()) return false;
    if (!(b.miner_pubkey == key->second)) return false;
    if (!crypto::verify(digest_as_bytes(block_hash(b)), b.miner_signature, key->second))
      return false;
  }
  return true;
}

}  // namespace qvanet::ledger
