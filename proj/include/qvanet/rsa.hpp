#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/hex.hpp"
#include "qvanet/numeric.hpp"
#include "qvanet/sha256.hpp"

// Textbook RSA at toy scale, on purpose: the attack in this project targets
// exactly the unpadded small-key scheme. Messages are hashed with SHA-256 and
// the first 8 digest bytes, reduced mod N, form the signed symbol sequence.
namespace qvanet::crypto {

using MessageDigest = Sha256::Digest;
using SymbolSignature = std::vector<std::uint64_t>;

inline constexpr std::size_t kSignatureSymbols = 8;
inline constexpr std::uint64_t kMinModulus = 15;  // smallest odd semiprime fitting the alphabet

struct PublicKey {
  std::uint64_t e = 0;
  std::uint64_t N = 0;

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct RsaKeyPair {
  std::uint64_t p = 0;
  std::uint64_t q = 0;
  std::uint64_t N = 0;
  std::uint64_t phi = 0;
  std::uint64_t e = 0;
  std::uint64_t d = 0;

  PublicKey public_key() const { return PublicKey{e, N}; }
};

// (e, N) integer pair, the wire form for registries and scenario files.
inline nlohmann::json to_json(const PublicKey& pk) { return nlohmann::json::array({pk.e, pk.N}); }

inline PublicKey public_key_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("public key must be [e, N]");
  return PublicKey{j[0].get<std::uint64_t>(), j[1].get<std::uint64_t>()};
}

inline std::uint64_t derive_private_exponent(std::uint64_t e, std::uint64_t p, std::uint64_t q) {
  if (!is_prime(p) || !is_prime(q)) throw std::invalid_argument("factors must be prime");
  const std::uint64_t phi = (p - 1) * (q - 1);
  if (std::gcd(e, phi) != 1) throw std::invalid_argument("e is not coprime to phi");
  return mod_inverse(e, phi);
}

inline RsaKeyPair keygen(std::uint64_t p, std::uint64_t q, std::uint64_t e) {
  if (!is_prime(p)) throw std::invalid_argument("keygen: p is not prime");
  if (!is_prime(q)) throw std::invalid_argument("keygen: q is not prime");
  if (p == q) throw std::invalid_argument("keygen: p and q must be distinct");
  RsaKeyPair kp;
  kp.p = p;
  kp.q = q;
  kp.N = p * q;
  if (kp.N < kMinModulus) throw std::invalid_argument("keygen: modulus below the symbol alphabet");
  kp.phi = (p - 1) * (q - 1);
  if (e <= 1 || e >= kp.phi || std::gcd(e, kp.phi) != 1)
    throw std::invalid_argument("keygen: e must lie in (1, phi) and be coprime to phi");
  kp.e = e;
  kp.d = mod_inverse(e, kp.phi);
  return kp;
}

// Default policy: smallest exponent > 1 coprime to phi. Reproducibility over
// security, which is the point at this key size.
inline RsaKeyPair keygen(std::uint64_t p, std::uint64_t q) {
  if (!is_prime(p)) throw std::invalid_argument("keygen: p is not prime");
  if (!is_prime(q)) throw std::invalid_argument("keygen: q is not prime");
  if (p == q) throw std::invalid_argument("keygen: p and q must be distinct");
  const std::uint64_t phi = (p - 1) * (q - 1);
  std::uint64_t e = 2;
  while (e < phi && std::gcd(e, phi) != 1) ++e;
  if (e >= phi) throw std::invalid_argument("keygen: no valid public exponent");
  return keygen(p, q, e);
}

inline MessageDigest digest(std::string_view message) { return Sha256::hash(message); }

inline std::string digest_hex(const MessageDigest& d) { return to_hex(d); }

// Digest byte i mod N for the first k bytes. The toy message space is a
// handful of residues, so this is how a 256-bit hash meets a 4-bit key.
inline std::vector<std::uint64_t> digest_to_symbols(const MessageDigest& d, std::uint64_t N,
                                                    std::size_t k = kSignatureSymbols) {
  if (N < 2) throw std::invalid_argument("digest_to_symbols: modulus must be >= 2");
  if (k > d.size()) throw std::invalid_argument("digest_to_symbols: too many symbols requested");
  std::vector<std::uint64_t> symbols(k);
  for (std::size_t i = 0; i < k; ++i) symbols[i] = d[i] % N;
  return symbols;
}

// Low-level signing with a bare exponent; this is what a forged key uses.
inline SymbolSignature sign_with_exponent(std::string_view message, std::uint64_t d,
                                          std::uint64_t N) {
  SymbolSignature sig;
  for (const std::uint64_t s : digest_to_symbols(digest(message), N)) {
    sig.push_back(modexp(s, d, N));
  }
  return sig;
}

inline SymbolSignature sign(std::string_view message, const RsaKeyPair& kp) {
  return sign_with_exponent(message, kp.d, kp.N);
}

inline bool verify(std::string_view message, const SymbolSignature& sig, const PublicKey& pk) {
  if (pk.N < 2 || sig.size() != kSignatureSymbols) return false;
  const auto symbols = digest_to_symbols(digest(message), pk.N);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (sig[i] >= pk.N || modexp(sig[i], pk.e, pk.N) != symbols[i]) return false;
  }
  return true;
}

// V2V text alphabet: 'a'..'n' <-> 1..14, value 0 reserved.
inline constexpr char kAlphabetFirst = 'a';
inline constexpr char kAlphabetLast = 'n';

inline std::uint64_t char_to_value(char c) {
  if (c < kAlphabetFirst || c > kAlphabetLast)
    throw std::invalid_argument(std::string("character outside the a..n alphabet: ") + c);
  return static_cast<std::uint64_t>(c - kAlphabetFirst + 1);
}

inline char value_to_char(std::uint64_t v) {
  if (v < 1 || v > 14) throw std::invalid_argument("value outside the 1..14 alphabet range");
  return static_cast<char>(kAlphabetFirst + v - 1);
}

inline std::vector<std::uint64_t> encrypt_text(std::string_view plaintext, const PublicKey& pk) {
  if (pk.N < kMinModulus) throw std::invalid_argument("encrypt_text: modulus too small for the alphabet");
  std::vector<std::uint64_t> out;
  out.reserve(plaintext.size());
  for (const char c : plaintext) out.push_back(modexp(char_to_value(c), pk.e, pk.N));
  return out;
}

inline std::string decrypt_text(const std::vector<std::uint64_t>& symbols, const RsaKeyPair& kp) {
  if (kp.N < kMinModulus) throw std::invalid_argument("decrypt_text: modulus too small for the alphabet");
  std::string out;
  out.reserve(symbols.size());
  for (const std::uint64_t s : symbols) out.push_back(value_to_char(modexp(s, kp.d, kp.N)));
  return out;
}

}  // namespace qvanet::crypto
