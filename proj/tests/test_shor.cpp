#include <set>

#include <gtest/gtest.h>

#include "qvanet/shor.hpp"
#include "support/oracles.hpp"

using namespace qvanet;

TEST(ModExp, KnownValues) {
  EXPECT_EQ(modexp(7, 0, 15), 1u);
  EXPECT_EQ(modexp(7, 2, 15), 4u);
  EXPECT_EQ(modexp(7, 4, 15), 1u);
  EXPECT_EQ(modexp(2, 10, 1000), 24u);
}

TEST(OrderBruteForce, KnownOrders) {
  EXPECT_EQ(shor::order_brute_force(7, 15), 4u);
  EXPECT_EQ(shor::order_brute_force(1, 15), 1u);
  EXPECT_EQ(shor::order_brute_force(2, 15), 4u);
}

TEST(OrderBruteForce, RejectsSharedFactor) {
  EXPECT_THROW(shor::order_brute_force(5, 15), std::invalid_argument);
}

TEST(OrderFindingCircuit, OutcomesLandOnPeaks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DetRng rng(seed);
    const auto c = shor::run_order_finding_circuit(7, 15, 4, rng);
    EXPECT_TRUE(c == 0 || c == 4 || c == 8 || c == 12) << "outcome " << c;
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DetRng rng(seed);
    const auto c = shor::run_order_finding_circuit(2, 15, 4, rng);
    EXPECT_TRUE(c == 0 || c == 4 || c == 8 || c == 12) << "outcome " << c;
  }
}

TEST(OrderFindingCircuit, FixedSeedReproduces) {
  DetRng a(77), b(77);
  EXPECT_EQ(shor::run_order_finding_circuit(7, 15, 4, a),
            shor::run_order_finding_circuit(7, 15, 4, b));
}

TEST(ExtractOrder, ContinuedFractionExamples) {
  EXPECT_EQ(shor::extract_order_candidate(12, 4, 15).value(), 4u);  // 12/16 = 3/4
  EXPECT_EQ(shor::extract_order_candidate(8, 4, 15).value(), 2u);   // 8/16 = 1/2
  EXPECT_FALSE(shor::extract_order_candidate(0, 4, 15).has_value());
}

TEST(ExtractOrder, RejectsOutOfRangeMeasurement) {
  EXPECT_THROW(shor::extract_order_candidate(16, 4, 15), std::out_of_range);
}

TEST(RecoverFactors, GcdExamples) {
  const auto f = shor::recover_factors(7, 4, 15);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(*f, std::make_pair(std::uint64_t{3}, std::uint64_t{5}));

  // 14 = -1 mod 15: the excluded congruence branch
  EXPECT_FALSE(shor::recover_factors(14, 2, 15).has_value());

  const auto g = shor::recover_factors(4, 2, 15);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(*g, std::make_pair(std::uint64_t{3}, std::uint64_t{5}));
}

TEST(RecoverFactors, OddOrderYieldsNothing) {
  EXPECT_FALSE(shor::recover_factors(4, 5, 11).has_value());  // 4^5 = 1 mod 11, odd order
}

TEST(RecoverFactors, RejectsInvalidOrder) {
  EXPECT_THROW(shor::recover_factors(7, 3, 15), std::invalid_argument);
}

TEST(Factor, CanonicalSmallSemiprime) {
  const auto outcome = shor::factor(15);
  EXPECT_EQ(*outcome.factors, std::make_pair(std::uint64_t{3}, std::uint64_t{5}));
}

TEST(Factor, MatchesTrialDivision) {
  // At the default counting width, extraction succeeds only on clean phase
  // peaks; a larger attempt budget lets the base-switching loop ride out the
  // unproductive bases.
  for (const std::uint64_t n : {21ull, 33ull, 35ull}) {
    shor::FactoringConfig cfg;
    cfg.modulus = n;
    cfg.max_attempts = 200;
    const auto outcome = shor::factor(n, cfg);
    EXPECT_EQ(*outcome.factors, oracle::trial_division(n)) << "N = " << n;
  }
}

TEST(Factor, FixedBaseWithSharedFactorSkipsCircuit) {
  const auto outcome = shor::factor(15, shor::FactoringConfig::fixed_base_config(15, 5));
  EXPECT_EQ(*outcome.factors, std::make_pair(std::uint64_t{3}, std::uint64_t{5}));
  ASSERT_EQ(outcome.attempts.size(), 1u);
  EXPECT_FALSE(outcome.attempts[0].measured.has_value());  // zero circuit runs
}

TEST(Factor, ClassicalScreens) {
  EXPECT_EQ(*shor::factor(14).factors, std::make_pair(std::uint64_t{2}, std::uint64_t{7}));
  EXPECT_EQ(*shor::factor(27).factors, std::make_pair(std::uint64_t{3}, std::uint64_t{9}));
  EXPECT_THROW(shor::factor(13), shor::PrimeInputError);
  EXPECT_THROW(shor::factor(3), std::invalid_argument);
}

TEST(Factor, ExhaustsBudgetOnHopelessBase) {
  // 14 = -1 mod 15: every even-order recovery lands on the excluded branch.
  auto cfg = shor::FactoringConfig::fixed_base_config(15, 14);
  cfg.max_attempts = 6;
  try {
    shor::factor(15, cfg);
    FAIL() << "expected AttemptsExhaustedError";
  } catch (const shor::AttemptsExhaustedError& e) {
    EXPECT_EQ(e.outcome.attempts_used, 6u);
    EXPECT_EQ(e.outcome.attempts.size(), 6u);
    EXPECT_TRUE(e.outcome.failure_reason.has_value());
  }
}

TEST(Factor, DeterministicTraceForIdenticalConfig) {
  shor::FactoringConfig cfg;
  cfg.modulus = 21;
  cfg.seed = 5;
  const auto a = shor::factor(21, cfg);
  const auto b = shor::factor(21, cfg);
  EXPECT_EQ(shor::to_json(a, false).dump(), shor::to_json(b, false).dump());
}

TEST(Factor, ProductAlwaysMatchesInput) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    for (const std::uint64_t n : {15ull, 21ull, 33ull, 35ull}) {
      shor::FactoringConfig cfg;
      cfg.modulus = n;
      cfg.seed = seed;
      cfg.max_attempts = 200;
      const auto outcome = shor::factor(n, cfg);
      EXPECT_EQ(outcome.factors->first * outcome.factors->second, n);
      EXPECT_GT(outcome.factors->first, 1u);
      EXPECT_LT(outcome.factors->second, n);
    }
  }
}

TEST(Factor, ValidatedOrderMatchesBruteForceOracle) {
  // Every coprime base of every test modulus: keep measuring until a
  // validated order appears, then compare with the classical oracle. Two
  // extra counting qubits give the continued-fraction step enough phase
  // resolution to reach every order, not just the divisors of 2^t.
  for (const std::uint64_t n : {15ull, 21ull, 33ull, 35ull}) {
    const unsigned t = bit_length(n) + 2;
    for (std::uint64_t m = 2; m < n - 1; ++m) {
      if (std::gcd(m, n) != 1) continue;
      DetRng rng(1000 + n * 100 + m);
      std::optional<std::uint64_t> validated;
      for (int attempt = 0; attempt < 80 && !validated; ++attempt) {
        const auto c = shor::run_order_finding_circuit(m, n, t, rng);
        const auto cand = shor::extract_order_candidate(c, t, n);
        if (cand && modexp(m, *cand, n) == 1) validated = cand;
      }
      ASSERT_TRUE(validated.has_value()) << "no validated order for m=" << m << " N=" << n;
      EXPECT_EQ(*validated, shor::order_brute_force(m, n)) << "m=" << m << " N=" << n;
    }
  }
}

TEST(Factor, SingleShotSuccessProbability) {
  // Analytic: outcomes 4 and 12 recover factors, 0 and 8 do not.
  const auto counting = qsim::QubitRange::contiguous(0, 4, qsim::RegisterRole::counting);
  qsim::QubitRegisterState st(8);
  const auto work = qsim::QubitRange::contiguous(4, 4, qsim::RegisterRole::work);
  for (unsigned j = 0; j < 4; ++j) st.apply_hadamard(j);
  st.apply_pauli_x(4);
  for (unsigned j = 0; j < 4; ++j) {
    st.apply_controlled_modmul(j, work, modexp(7, 1ull << j, 15), 15);
  }
  st.apply_inverse_qft(counting);
  const auto probs = st.marginal_distribution(counting);
  EXPECT_NEAR(probs[4] + probs[12], 0.5, 1e-12);

  int successes = 0;
  const int shots = 1000;
  for (int i = 0; i < shots; ++i) {
    DetRng rng(40000 + i);
    const auto c = shor::run_order_finding_circuit(7, 15, 4, rng);
    const auto cand = shor::extract_order_candidate(c, 4, 15);
    if (cand && modexp(7, *cand, 15) == 1 && shor::recover_factors(7, *cand, 15)) ++successes;
  }
  EXPECT_NEAR(static_cast<double>(successes) / shots, 0.5, 0.05);
}

TEST(Numeric, IntegerRootsAndPowers) {
  EXPECT_EQ(integer_kth_root(27, 3), 3u);
  EXPECT_EQ(integer_kth_root(26, 3), 2u);
  EXPECT_EQ(perfect_power_base(27).value(), 3u);
  EXPECT_EQ(perfect_power_base(16).value(), 2u);
  EXPECT_FALSE(perfect_power_base(15).has_value());
}

TEST(Numeric, ModInverseMatchesScanOracle) {
  for (const auto [e, phi] : {std::pair<std::uint64_t, std::uint64_t>{3, 8},
                              {5, 12},
                              {7, 40},
                              {3, 20}}) {
    EXPECT_EQ(mod_inverse(e, phi), oracle::scan_inverse(e, phi));
  }
  EXPECT_THROW(mod_inverse(2, 8), std::invalid_argument);
}
