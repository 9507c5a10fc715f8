#pragma once

#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/numeric.hpp"
#include "qvanet/qsim.hpp"
#include "qvanet/rng.hpp"

namespace qvanet::shor {

enum class BasePolicy { fixed, random_coprime };

struct FactoringConfig {
  std::uint64_t modulus = 0;
  unsigned counting_qubits = 0;  // 0 -> bit length of the modulus
  unsigned max_attempts = 20;
  std::uint64_t seed = 0;
  BasePolicy base_policy = BasePolicy::random_coprime;
  std::uint64_t fixed_base = 0;

  static FactoringConfig fixed_base_config(std::uint64_t modulus, std::uint64_t base,
                                           std::uint64_t seed = 0) {
    FactoringConfig c;
    c.modulus = modulus;
    c.base_policy = BasePolicy::fixed;
    c.fixed_base = base;
    c.seed = seed;
    return c;
  }
};

struct AttemptRecord {
  std::uint64_t base = 0;
  std::optional<std::uint64_t> measured;       // counting-register outcome
  double phase = 0.0;                          // measured / 2^t
  std::optional<std::uint64_t> candidate_order;
  bool order_valid = false;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> factors;
  std::string note;
};

struct ShorOutcome {
  std::uint64_t modulus = 0;
  std::uint64_t base = 0;
  std::uint64_t measured = 0;
  double phase = 0.0;
  std::optional<std::uint64_t> order;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> factors;
  std::optional<std::string> failure_reason;
  unsigned attempts_used = 0;
  double wall_time_s = 0.0;
  std::vector<AttemptRecord> attempts;
};

struct PrimeInputError : std::invalid_argument {
  explicit PrimeInputError(std::uint64_t n)
      : std::invalid_argument("no nontrivial factor exists: " + std::to_string(n) + " is prime") {}
};

struct AttemptsExhaustedError : std::runtime_error {
  explicit AttemptsExhaustedError(ShorOutcome trace)
      : std::runtime_error("factoring attempt budget exhausted for N = " +
                           std::to_string(trace.modulus)),
        outcome(std::move(trace)) {}
  ShorOutcome outcome;
};

// wall_time_s is excluded when a byte-stable serialization is needed (the
// simulator's event log must be identical across reruns of the same seed).
inline nlohmann::json to_json(const AttemptRecord& a) {
  nlohmann::json j{{"base", a.base}, {"phase", a.phase}, {"order_valid", a.order_valid}};
  if (a.measured) j["measured"] = *a.measured;
  if (a.candidate_order) j["candidate_order"] = *a.candidate_order;
  if (a.factors) j["factors"] = {a.factors->first, a.factors->second};
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

inline nlohmann::json to_json(const ShorOutcome& o, bool include_wall_time = true) {
  nlohmann::json j{{"modulus", o.modulus},
                   {"base", o.base},
                   {"measured", o.measured},
                   {"phase", o.phase},
                   {"attempts_used", o.attempts_used}};
  if (o.order) j["order"] = *o.order;
  if (o.factors) j["factors"] = {o.factors->first, o.factors->second};
  if (o.failure_reason) j["failure_reason"] = *o.failure_reason;
  if (include_wall_time) j["wall_time_s"] = o.wall_time_s;
  nlohmann::json attempts = nlohmann::json::array();
  for (const auto& a : o.attempts) attempts.push_back(to_json(a));
  j["attempts"] = attempts;
  return j;
}

// Smallest r >= 1 with m^r = 1 (mod N). Classical oracle for the quantum path.
inline std::uint64_t order_brute_force(std::uint64_t m, std::uint64_t N) {
  if (N < 2) throw std::invalid_argument("order_brute_force: modulus must be >= 2");
  if (std::gcd(m % N, N) != 1)
    throw std::invalid_argument("order_brute_force: base not coprime to modulus");
  std::uint64_t value = 1;
  for (std::uint64_t r = 1; r <= N; ++r) {
    value = mulmod(value, m % N, N);
    if (value == 1) return r;
  }
  throw std::logic_error("order not found below modulus");  // unreachable for coprime inputs
}

// Builds and runs the order-finding circuit: Hadamards on t counting qubits,
// X to set the work register to 1, controlled multiplications by m^(2^j),
// inverse QFT on the counting register, measurement. Returns the measured
// counting value in [0, 2^t).
inline std::uint64_t run_order_finding_circuit(std::uint64_t m, std::uint64_t N, unsigned t,
                                               DetRng& rng) {
  if (t == 0) throw std::invalid_argument("need at least one counting qubit");
  if (N < 2) throw std::invalid_argument("modulus must be >= 2");
  if (std::gcd(m % N, N) != 1) throw std::invalid_argument("base not coprime to modulus");

  const unsigned work_bits = bit_length(N);
  qsim::QubitRegisterState state(t + work_bits);
  const auto counting = qsim::QubitRange::contiguous(0, t, qsim::RegisterRole::counting);
  const auto work = qsim::QubitRange::contiguous(t, work_bits, qsim::RegisterRole::work);

  for (unsigned j = 0; j < t; ++j) state.apply_hadamard(counting.indices[j]);
  state.apply_pauli_x(work.indices[0]);  // work register |1>

  for (unsigned j = 0; j < t; ++j) {
    const std::uint64_t a = modexp(m, std::uint64_t{1} << j, N);
    state.apply_controlled_modmul(counting.indices[j], work, a, N);
  }

  state.apply_inverse_qft(counting);
  return state.measure(counting, rng);
}

// Continued-fraction extraction: the denominator of the last convergent of
// c/2^t with denominator <= N. c = 0 carries no period information.
inline std::optional<std::uint64_t> extract_order_candidate(std::uint64_t c, unsigned t,
                                                            std::uint64_t N) {
  if (t >= 64) throw std::invalid_argument("counting register too wide");
  const std::uint64_t m = std::uint64_t{1} << t;
  if (c >= m) throw std::out_of_range("measured value exceeds counting range");
  if (c == 0) return std::nullopt;

  std::optional<std::uint64_t> best;
  for (const auto& [num, den] : convergents(c, m)) {
    (void)num;
    if (den >= 1 && den <= N) best = den;
  }
  return best;
}

// Classical factor recovery from a validated order. Returns nothing when r is
// odd or m^(r/2) = -1 (mod N); otherwise the sorted nontrivial gcd pair.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> recover_factors(std::uint64_t m,
                                                                              std::uint64_t r,
                                                                              std::uint64_t N) {
  if (modexp(m, r, N) != 1)
    throw std::invalid_argument("recover_factors: r is not a valid order for m mod N");
  if (r % 2 != 0) return std::nullopt;
  const std::uint64_t x = modexp(m, r / 2, N);  // nonzero: m is a unit mod N
  if (x == N - 1) return std::nullopt;          // the excluded congruence branch
  const std::uint64_t p = std::gcd(x - 1, N);
  const std::uint64_t q = std::gcd(x + 1, N);
  if (p <= 1 || p >= N || q <= 1 || q >= N) return std::nullopt;
  return std::make_pair(std::min(p, q), std::max(p, q));
}

namespace detail {

inline std::uint64_t pick_base(const FactoringConfig& cfg, std::uint64_t N, DetRng& rng) {
  if (cfg.base_policy == BasePolicy::fixed) {
    if (cfg.fixed_base < 2 || cfg.fixed_base >= N)
      throw std::invalid_argument("fixed base must lie in [2, N-1)");
    return cfg.fixed_base;
  }
  // Uniform over {2..N-2} restricted to bases coprime to N.
  while (true) {
    const std::uint64_t m = 2 + rng.below(N - 3);
    if (std::gcd(m, N) == 1) return m;
  }
}

}  // namespace detail

// Full factoring loop with the classical screens: even N, perfect powers and
// shared-factor bases short-circuit without touching the simulator. Throws
// PrimeInputError for primes and AttemptsExhaustedError when the budget runs
// out; on success the outcome's factors satisfy p*q = N with 1 < p <= q < N.
inline ShorOutcome factor(std::uint64_t N, const FactoringConfig& cfg, DetRng& rng) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&started] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  ShorOutcome outcome;
  outcome.modulus = N;
  if (N <= 3) throw std::invalid_argument("factor: N must be > 3");

  auto finish = [&](std::uint64_t p, std::uint64_t q) {
    outcome.factors = std::make_pair(std::min(p, q), std::max(p, q));
    outcome.wall_time_s = elapsed();
    return outcome;
  };

  if (N % 2 == 0) return finish(2, N / 2);
  if (is_prime(N)) throw PrimeInputError(N);
  if (const auto b = perfect_power_base(N)) return finish(*b, N / *b);

  const unsigned t = cfg.counting_qubits > 0 ? cfg.counting_qubits : bit_length(N);
  std::uint64_t base = detail::pick_base(cfg, N, rng);
  unsigned same_base_tries = 0;

  while (outcome.attempts_used < cfg.max_attempts) {
    ++outcome.attempts_used;
    AttemptRecord rec;
    rec.base = base;
    outcome.base = base;

    if (const std::uint64_t g = std::gcd(base, N); g > 1) {
      rec.note = "base shares a factor; gcd shortcut";
      rec.factors = std::make_pair(std::min(g, N / g), std::max(g, N / g));
      outcome.attempts.push_back(rec);
      return finish(g, N / g);
    }

    const std::uint64_t c = run_order_finding_circuit(base, N, t, rng);
    rec.measured = c;
    rec.phase = static_cast<double>(c) / static_cast<double>(std::uint64_t{1} << t);
    outcome.measured = c;
    outcome.phase = rec.phase;

    const auto candidate = extract_order_candidate(c, t, N);
    rec.candidate_order = candidate;
    if (candidate && modexp(base, *candidate, N) == 1) {
      rec.order_valid = true;
      outcome.order = candidate;
      if (const auto factors = recover_factors(base, *candidate, N)) {
        rec.factors = factors;
        outcome.attempts.push_back(rec);
        return finish(factors->first, factors->second);
      }
      rec.note = "valid order yields no factors";
    } else if (candidate) {
      rec.note = "candidate order failed the modexp check";
    } else {
      rec.note = "no order candidate from measurement";
    }
    outcome.attempts.push_back(rec);

    // Three failed measurements on one base before switching.
    if (++same_base_tries >= 3 && cfg.base_policy == BasePolicy::random_coprime) {
      base = detail::pick_base(cfg, N, rng);
      same_base_tries = 0;
    }
  }

  outcome.failure_reason = "attempt budget exhausted";
  outcome.wall_time_s = elapsed();
  throw AttemptsExhaustedError(outcome);
}

inline ShorOutcome factor(std::uint64_t N, const FactoringConfig& cfg) {
  DetRng rng(cfg.seed);
  return factor(N, cfg, rng);
}

inline ShorOutcome factor(std::uint64_t N) {
  FactoringConfig cfg;
  cfg.modulus = N;
  return factor(N, cfg);
}

}  // namespace qvanet::shor
