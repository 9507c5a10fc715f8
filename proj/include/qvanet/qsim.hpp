#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvanet/numeric.hpp"
#include "qvanet/rng.hpp"

namespace qvanet::qsim {

using Amplitude = std::complex<double>;

inline constexpr double kNormTolerance = 1e-9;
inline constexpr unsigned kMaxQubits = 24;

enum class RegisterRole { counting, work };

// Ordered list of distinct qubit indices forming a sub-register.
// indices[0] is the least significant bit of the sub-register value.
struct QubitRange {
  std::vector<unsigned> indices;
  RegisterRole role = RegisterRole::work;

  std::size_t size() const { return indices.size(); }

  static QubitRange contiguous(unsigned first, unsigned count, RegisterRole role) {
    QubitRange r;
    r.role = role;
    r.indices.resize(count);
    for (unsigned i = 0; i < count; ++i) r.indices[i] = first + i;
    return r;
  }
};

// Bitstring rendered most-significant-bit first.
inline std::string to_bitstring(std::uint64_t value, unsigned width) {
  std::string out(width, '0');
  for (unsigned i = 0; i < width; ++i) {
    if ((value >> i) & 1) out[width - 1 - i] = '1';
  }
  return out;
}

// Dense statevector over 2^num_qubits basis states. Qubit 0 is the least
// significant bit of the basis-state index. Gates mutate in place;
// normalization is re-checked (never silently re-imposed) after every
// operation so numerical corruption surfaces immediately.
class QubitRegisterState {
 public:
  explicit QubitRegisterState(unsigned num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits == 0) throw std::invalid_argument("state needs at least one qubit");
    if (num_qubits > kMaxQubits) throw std::invalid_argument("state exceeds the qubit limit");
    amps_.assign(std::uint64_t{1} << num_qubits, Amplitude{0.0, 0.0});
    amps_[0] = Amplitude{1.0, 0.0};
  }

  static QubitRegisterState basis_state(unsigned num_qubits, std::uint64_t value) {
    QubitRegisterState s(num_qubits);
    if (value >= s.dimension()) throw std::out_of_range("basis value out of range");
    s.amps_[0] = Amplitude{0.0, 0.0};
    s.amps_[value] = Amplitude{1.0, 0.0};
    return s;
  }

  unsigned num_qubits() const { return num_qubits_; }
  std::uint64_t dimension() const { return amps_.size(); }
  const std::vector<Amplitude>& amplitudes() const { return amps_; }
  Amplitude amplitude(std::uint64_t basis) const { return amps_.at(basis); }
  void set_amplitudes(std::vector<Amplitude> amps) {
    if (amps.size() != amps_.size()) throw std::invalid_argument("amplitude vector size mismatch");
    amps_ = std::move(amps);
    check_norm();
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }

  void apply_hadamard(unsigned qubit) {
    check_qubit(qubit);
    const std::uint64_t bit = std::uint64_t{1} << qubit;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      if (i & bit) continue;
      const Amplitude a0 = amps_[i];
      const Amplitude a1 = amps_[i | bit];
      amps_[i] = (a0 + a1) * inv_sqrt2;
      amps_[i | bit] = (a0 - a1) * inv_sqrt2;
    }
    check_norm();
  }

  void apply_pauli_x(unsigned qubit) {
    check_qubit(qubit);
    const std::uint64_t bit = std::uint64_t{1} << qubit;
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      if (!(i & bit)) std::swap(amps_[i], amps_[i | bit]);
    }
    check_norm();
  }

  // Controlled modular multiplication: for basis states with the control bit
  // set and work value y < N, the work value becomes (a*y) mod N. Work values
  // >= N and control-0 branches pass through unchanged, which makes the gate
  // a permutation of basis states (unitary) whenever gcd(a, N) = 1.
  void apply_controlled_modmul(unsigned control, const QubitRange& work, std::uint64_t a,
                               std::uint64_t N) {
    check_qubit(control);
    check_range(work);
    if (N < 2) throw std::invalid_argument("modulus must be >= 2");
    if (std::gcd(a % N, N) != 1)
      throw std::invalid_argument("controlled modmul needs gcd(a, N) = 1 to stay invertible");
    if ((std::uint64_t{1} << work.size()) < N)
      throw std::invalid_argument("work register too small for the modulus");
    for (unsigned idx : work.indices) {
      if (idx == control) throw std::invalid_argument("control qubit overlaps work register");
    }
    const std::uint64_t ctrl_bit = std::uint64_t{1} << control;
    const std::uint64_t amod = a % N;

    std::vector<Amplitude> next(dimension(), Amplitude{0.0, 0.0});
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      std::uint64_t j = i;
      if (i & ctrl_bit) {
        const std::uint64_t y = extract(i, work);
        if (y < N) {
          j = deposit(i, work, mulmod(amod, y, N));
        }
      }
      next[j] = amps_[i];
    }
    amps_ = std::move(next);
    check_norm();
  }

  void apply_qft(const QubitRange& qubits) { apply_dft(qubits, /*inverse=*/false); }
  void apply_inverse_qft(const QubitRange& qubits) { apply_dft(qubits, /*inverse=*/true); }

  // Probability of each sub-register value, summed over the rest of the state.
  std::vector<double> marginal_distribution(const QubitRange& qubits) const {
    check_range(qubits);
    std::vector<double> probs(std::uint64_t{1} << qubits.size(), 0.0);
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      probs[extract(i, qubits)] += std::norm(amps_[i]);
    }
    return probs;
  }

  // Samples an outcome for the sub-register and collapses the state onto the
  // observed branch. Returns the measured value (render with to_bitstring for
  // the MSB-first classical record).
  std::uint64_t measure(const QubitRange& qubits, DetRng& rng) {
    const std::vector<double> probs = marginal_distribution(qubits);
    const double u = rng.unit();
    double acc = 0.0;
    std::uint64_t outcome = probs.size() - 1;
    for (std::uint64_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) {
        outcome = k;
        break;
      }
    }
    const double p = probs[outcome];
    if (p <= 0.0) throw std::logic_error("measured a zero-probability branch; state corrupted");
    const double scale = 1.0 / std::sqrt(p);
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      if (extract(i, qubits) == outcome) {
        amps_[i] *= scale;
      } else {
        amps_[i] = Amplitude{0.0, 0.0};
      }
    }
    check_norm();
    return outcome;
  }

  // Debug view: nonzero amplitudes as [[basis index, re, im], ...].
  nlohmann::json dump_nonzero() const {
    nlohmann::json out = nlohmann::json::array();
    for (std::uint64_t i = 0; i < dimension(); ++i) {
      if (std::norm(amps_[i]) > 0.0) {
        out.push_back({i, amps_[i].real(), amps_[i].imag()});
      }
    }
    return out;
  }

 private:
  void check_qubit(unsigned qubit) const {
    if (qubit >= num_qubits_) throw std::out_of_range("qubit index out of range");
  }

  void check_range(const QubitRange& range) const {
    if (range.indices.empty()) throw std::invalid_argument("empty qubit range");
    std::vector<bool> seen(num_qubits_, false);
    for (unsigned idx : range.indices) {
      check_qubit(idx);
      if (seen[idx]) throw std::invalid_argument("duplicate qubit index in range");
      seen[idx] = true;
    }
  }

  void check_norm() const {
    const double n = norm_squared();
    if (std::abs(n - 1.0) > kNormTolerance) {
      throw std::logic_error("state norm drifted beyond tolerance: " + std::to_string(n));
    }
  }

  // Sub-register value of basis index i; indices[0] is the LSB.
  static std::uint64_t extract(std::uint64_t i, const QubitRange& range) {
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < range.indices.size(); ++k) {
      v |= ((i >> range.indices[k]) & 1) << k;
    }
    return v;
  }

  // Basis index i with the sub-register bits replaced by value v.
  static std::uint64_t deposit(std::uint64_t i, const QubitRange& range, std::uint64_t v) {
    for (std::size_t k = 0; k < range.indices.size(); ++k) {
      const std::uint64_t bit = std::uint64_t{1} << range.indices[k];
      if ((v >> k) & 1) {
        i |= bit;
      } else {
        i &= ~bit;
      }
    }
    return i;
  }

  // Size-2^t DFT applied to the sub-register, for every setting of the other
  // qubits. out[k] = (1/sqrt(M)) * sum_v w^(±kv) in[v], w = exp(2*pi*i/M).
  void apply_dft(const QubitRange& qubits, bool inverse) {
    check_range(qubits);
    const std::uint64_t m = std::uint64_t{1} << qubits.size();
    const double sign = inverse ? -1.0 : 1.0;
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));

    std::vector<Amplitude> roots(m);
    for (std::uint64_t j = 0; j < m; ++j) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
      roots[j] = Amplitude{std::cos(angle), std::sin(angle)};
    }

    std::uint64_t range_mask = 0;
    for (unsigned idx : qubits.indices) range_mask |= std::uint64_t{1} << idx;

    std::vector<Amplitude> in(m), out(m);
    for (std::uint64_t base = 0; base < dimension(); ++base) {
      if (base & range_mask) continue;  // enumerate each group once
      for (std::uint64_t v = 0; v < m; ++v) in[v] = amps_[deposit(base, qubits, v)];
      for (std::uint64_t k = 0; k < m; ++k) {
        Amplitude acc{0.0, 0.0};
        for (std::uint64_t v = 0; v < m; ++v) acc += in[v] * roots[(k * v) % m];
        out[k] = acc * inv_sqrt_m;
      }
      for (std::uint64_t k = 0; k < m; ++k) amps_[deposit(base, qubits, k)] = out[k];
    }
    check_norm();
  }

  unsigned num_qubits_;
  std::vector<Amplitude> amps_;
};

}  // namespace qvanet::qsim
