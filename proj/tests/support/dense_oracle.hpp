#pragma once

// Independent dense-matrix circuit simulator used as the oracle for the
// statevector implementation. Every gate is materialized as a full
// 2^n x 2^n matrix and applied by matrix-vector multiplication, so none of
// the production code paths (in-place pair updates, gather/scatter) are
// shared with the code under test.

#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qvanet/numeric.hpp"
#include "qvanet/qsim.hpp"

namespace oracle {

using Amp = std::complex<double>;
using Matrix = std::vector<std::vector<Amp>>;
using Vec = std::vector<Amp>;

inline Matrix identity_matrix(std::uint64_t dim) {
  Matrix m(dim, std::vector<Amp>(dim, Amp{0, 0}));
  for (std::uint64_t i = 0; i < dim; ++i) m[i][i] = Amp{1, 0};
  return m;
}

// Single-qubit gate g expanded over n qubits (qubit 0 = LSB of the index).
inline Matrix expand_single(const Amp g[2][2], unsigned n, unsigned qubit) {
  const std::uint64_t dim = std::uint64_t{1} << n;
  Matrix m(dim, std::vector<Amp>(dim, Amp{0, 0}));
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  for (std::uint64_t i = 0; i < dim; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      if ((i & ~bit) != (j & ~bit)) continue;
      m[i][j] = g[(i & bit) ? 1 : 0][(j & bit) ? 1 : 0];
    }
  }
  return m;
}

inline Matrix hadamard_matrix(unsigned n, unsigned qubit) {
  const double s = 1.0 / std::sqrt(2.0);
  const Amp g[2][2] = {{{s, 0}, {s, 0}}, {{s, 0}, {-s, 0}}};
  return expand_single(g, n, qubit);
}

inline Matrix pauli_x_matrix(unsigned n, unsigned qubit) {
  const Amp g[2][2] = {{{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}};
  return expand_single(g, n, qubit);
}

inline std::uint64_t range_value(std::uint64_t index, const qvanet::qsim::QubitRange& range) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < range.indices.size(); ++k) {
    v |= ((index >> range.indices[k]) & 1) << k;
  }
  return v;
}

inline std::uint64_t range_replace(std::uint64_t index, const qvanet::qsim::QubitRange& range,
                                   std::uint64_t v) {
  for (std::size_t k = 0; k < range.indices.size(); ++k) {
    const std::uint64_t bit = std::uint64_t{1} << range.indices[k];
    if ((v >> k) & 1) {
      index |= bit;
    } else {
      index &= ~bit;
    }
  }
  return index;
}

// Permutation matrix of the controlled modular multiplication.
inline Matrix controlled_modmul_matrix(unsigned n, unsigned control,
                                       const qvanet::qsim::QubitRange& work, std::uint64_t a,
                                       std::uint64_t N) {
  const std::uint64_t dim = std::uint64_t{1} << n;
  Matrix m(dim, std::vector<Amp>(dim, Amp{0, 0}));
  const std::uint64_t ctrl = std::uint64_t{1} << control;
  for (std::uint64_t j = 0; j < dim; ++j) {
    std::uint64_t i = j;
    if (j & ctrl) {
      const std::uint64_t y = range_value(j, work);
      if (y < N) i = range_replace(j, work, qvanet::mulmod(a % N, y, N));
    }
    m[i][j] = Amp{1, 0};
  }
  return m;
}

// DFT (sign = +1) or inverse DFT (sign = -1) on the sub-register, identity on
// the rest.
inline Matrix dft_matrix(unsigned n, const qvanet::qsim::QubitRange& range, int sign) {
  const std::uint64_t dim = std::uint64_t{1} << n;
  const std::uint64_t m_sub = std::uint64_t{1} << range.indices.size();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(m_sub));
  Matrix m(dim, std::vector<Amp>(dim, Amp{0, 0}));
  std::uint64_t mask = 0;
  for (unsigned idx : range.indices) mask |= std::uint64_t{1} << idx;
  for (std::uint64_t i = 0; i < dim; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      if ((i & ~mask) != (j & ~mask)) continue;
      const std::uint64_t k = range_value(i, range);
      const std::uint64_t v = range_value(j, range);
      const double angle = sign * 2.0 * std::numbers::pi *
                           static_cast<double>((k * v) % m_sub) / static_cast<double>(m_sub);
      m[i][j] = inv_sqrt * Amp{std::cos(angle), std::sin(angle)};
    }
  }
  return m;
}

inline Vec apply_matrix(const Matrix& m, const Vec& v) {
  Vec out(v.size(), Amp{0, 0});
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  }
  return out;
}

inline Matrix conjugate_transpose(const Matrix& m) {
  Matrix out(m.size(), std::vector<Amp>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out[i][j] = std::conj(m[j][i]);
  }
  return out;
}

// Full order-finding state for base m mod N with t counting qubits, built
// entirely from dense matrices.
inline Vec shor_state(std::uint64_t base, std::uint64_t N, unsigned t) {
  const unsigned work_bits = qvanet::bit_length(N);
  const unsigned n = t + work_bits;
  const auto counting = qvanet::qsim::QubitRange::contiguous(0, t, qvanet::qsim::RegisterRole::counting);
  const auto work = qvanet::qsim::QubitRange::contiguous(t, work_bits, qvanet::qsim::RegisterRole::work);

  Vec state(std::uint64_t{1} << n, Amp{0, 0});
  state[0] = Amp{1, 0};
  for (unsigned j = 0; j < t; ++j) state = apply_matrix(hadamard_matrix(n, j), state);
  state = apply_matrix(pauli_x_matrix(n, work.indices[0]), state);
  for (unsigned j = 0; j < t; ++j) {
    const std::uint64_t a = qvanet::modexp(base, std::uint64_t{1} << j, N);
    state = apply_matrix(controlled_modmul_matrix(n, counting.indices[j], work, a, N), state);
  }
  state = apply_matrix(dft_matrix(n, counting, -1), state);
  return state;
}

inline std::vector<double> marginal(const Vec& state, const qvanet::qsim::QubitRange& range) {
  std::vector<double> probs(std::uint64_t{1} << range.indices.size(), 0.0);
  for (std::uint64_t i = 0; i < state.size(); ++i) {
    probs[range_value(i, range)] += std::norm(state[i]);
  }
  return probs;
}

}  // namespace oracle
