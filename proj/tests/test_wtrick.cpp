#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "qfp/wtrick.hpp"

using namespace qfp;

namespace {

TrickParams params(double N, unsigned w, unsigned gexp, std::optional<double> iota_t = std::nullopt,
                   std::optional<double> eta_t = std::nullopt, double C1 = 20) {
  TrickParams p;
  p.N = N;
  p.w = w;
  p.gamma_exp = gexp;
  p.C1 = C1;
  p.iota_threshold = iota_t;
  p.eta_threshold = eta_t;
  return p;
}

}  // namespace

TEST(Exponents, IotaSandwich) {
  EXPECT_EQ(exponent_for_threshold(2, 100), 7u);
  EXPECT_EQ(exponent_for_threshold(2, 1), 1u);
  EXPECT_EQ(exponent_for_threshold(97, 96), 1u);
  // Ties land on the "<=" side: 2^7 = 128 exactly.
  EXPECT_EQ(exponent_for_threshold(2, 128), 7u);
  EXPECT_EQ(exponent_for_threshold(2, 128.5), 8u);
  EXPECT_EQ(iota(2, params(1e6, 2, 3, 100.0)), 7u);
}

TEST(Exponents, EtaSandwich) {
  EXPECT_EQ(eta(2, params(1e6, 3, 3, 1e3, 3.0)), 2u);
  EXPECT_EQ(eta(3, params(1e6, 3, 3, 1e3, 3.0)), 1u);
  EXPECT_EQ(eta(2, params(1e6, 3, 3, 1e3, 1.0)), 1u);
}

TEST(Exponents, IotaDominatesEta) {
  for (double N : {1e8, 1e12, 1e20, 1e40})
    for (unsigned w : {2u, 3u, 5u})
      for (double C1 : {1.0, 2.0, 5.0}) {
        auto pr = params(N, w, 2, std::nullopt, std::nullopt, C1);
        for (auto p : sieve_primes(w)) {
          EXPECT_GE(iota(p, pr), eta(p, pr));
          EXPECT_GE(eta(p, pr), 1u);
        }
      }
}

TEST(TrickModuli, Examples) {
  auto m = trick_moduli(params(1e30, 3, 2, 10.0));
  EXPECT_EQ(m.W, 6u);
  EXPECT_EQ(m.iota.at(2), 4u);
  EXPECT_EQ(m.iota.at(3), 3u);
  EXPECT_EQ(m.Wbar, 432u);
  auto m2 = trick_moduli(params(1e6, 2, 3, 2.0, 1.0));
  EXPECT_EQ(m2.W, 2u);
  EXPECT_EQ(m2.Wbar, 2u);
  EXPECT_EQ(trick_moduli(params(1e40, 5, 2, 5.0, 2.0)).W, 30u);
}

TEST(TrickModuli, RejectsLargeWbar) {
  // W̄ = 432 but N^γ - 1 = 10^(6/8) - 1 ≈ 4.6.
  EXPECT_THROW(trick_moduli(params(1e6, 3, 3, 10.0)), ConfigError);
  // The literal threshold log^{21} N overflows at any desk scale.
  EXPECT_THROW(trick_moduli(params(1e6, 2, 3)), ConfigError);
  // η > ι cannot be used.
  EXPECT_THROW(trick_moduli(params(1e30, 2, 2, 2.0, 8.0)), ConfigError);
  EXPECT_THROW(trick_moduli(params(1e6, 1, 3, 2.0)), ConfigError);
  EXPECT_THROW(trick_moduli(params(1e6, 2, 1, 2.0)), ConfigError);
}

TEST(X0, Examples) {
  auto pr = params(1e6, 2, 3, std::nullopt, std::nullopt, 2.0);
  EXPECT_TRUE(x0_contains(0, pr));
  // log^2(10^6) ≈ 190.9 < 17^2.
  EXPECT_TRUE(x0_contains(289, pr));
  EXPECT_TRUE(x0_clauses(factorize_trial(289), pr).rough);
  EXPECT_FALSE(x0_contains(999983, pr));
  EXPECT_THROW(x0_contains(1'000'001, pr), DomainError);
}

TEST(X0, ClausesMatchDirectDefinition) {
  auto pr = params(1e6, 2, 3, std::nullopt, std::nullopt, 3.0);
  const double logN = std::log(1e6), ll = std::log(logN);
  SieveTable sieve(1'000'000);
  for (std::uint64_t n = 1; n <= 1'000'000; n += 997) {
    bool rough = false;
    double smooth = 1, sq = 1;
    std::uint64_t m = n;
    for (std::uint64_t p = 2; p <= m; ++p) {
      if (m % p) continue;
      unsigned a = 0;
      std::uint64_t pa = 1;
      while (m % p == 0) {
        m /= p;
        ++a;
        pa *= p;
      }
      if (a >= 2 && static_cast<double>(pa) > std::pow(logN, 3.0)) rough = true;
      if (static_cast<double>(p) <= std::pow(1e6, std::pow(1 / ll, 3))) smooth *= static_cast<double>(pa);
      for (unsigned i = 0; i < a / 2; ++i) sq *= static_cast<double>(p);
    }
    bool expect = rough || smooth >= std::pow(1e6, 0.125 / ll) || sq > std::pow(1e6, 0.125);
    EXPECT_EQ(x0_contains(n, pr, &sieve), expect) << n;
  }
}

TEST(X0, DensityAcrossScales) {
  // With C1 = 20 and γ = 1/8 the smooth clause catches every even n at these
  // scales: only p = 2 lies below N^{(1/loglog N)^3}, and 2 exceeds
  // N^{γ/loglog N}. The density therefore sits just above 1/2, flat in N, and
  // the log^{-C1/2} N decay is not visible below astronomically large N.
  std::vector<double> dens;
  for (double N : {1e4, 1e5, 1e6}) {
    auto pr = params(N, 2, 3);
    auto n = static_cast<std::uint64_t>(N);
    SieveTable sieve(n);
    auto mask = x0_mask(sieve, n, pr);
    double c = 0;
    for (std::uint64_t i = 1; i <= n; ++i) {
      c += mask[i];
      if (i % 2 == 0) ASSERT_TRUE(mask[i]) << i;
    }
    dens.push_back(c / N);
  }
  RecordProperty("density_1e4", std::to_string(dens[0]));
  RecordProperty("density_1e5", std::to_string(dens[1]));
  RecordProperty("density_1e6", std::to_string(dens[2]));
  for (double d : dens) {
    EXPECT_GE(d, 0.5);
    EXPECT_LT(d, 0.6);
  }
}

TEST(LambdaPrime, Examples) {
  auto pr = params(1e6, 2, 3);  // N^{2γ} ≈ 31.6
  EXPECT_EQ(lambda_prime(4, pr), 0);
  EXPECT_EQ(lambda_prime(31, pr), 0);
  EXPECT_DOUBLE_EQ(lambda_prime(37, pr), std::log(37.0));
  EXPECT_EQ(lambda_prime(37 * 37, pr), 0);
}

TEST(TrickedVonMangoldt, Examples) {
  auto pr = params(1e7, 3, 3, 2.0, 1.0);
  auto m = trick_moduli(pr);
  ASSERT_EQ(m.Wbar, 6u);
  EXPECT_DOUBLE_EQ(m.phi_ratio(), 1.0 / 3);
  EXPECT_EQ(tricked_von_mangoldt(4, 1, m, pr), 0);  // 25
  EXPECT_DOUBLE_EQ(tricked_von_mangoldt(10, 1, m, pr), std::log(61.0) / 3);  // N^{2γ} ≈ 56
  EXPECT_EQ(tricked_von_mangoldt(1, 1, m, pr), 0);  // 7 < N^{2γ}
}

TEST(TrickedVonMangoldt, VanishesOffCoprimeClasses) {
  auto pr = params(1e7, 3, 3, 2.0, 1.0);
  auto m = trick_moduli(pr);
  for (std::uint64_t b = 0; b < m.Wbar; ++b) {
    if (std::gcd(b, m.W) == 1) continue;
    for (std::uint64_t n = 0; n <= 10'000; ++n) ASSERT_EQ(tricked_von_mangoldt(n, b, m, pr), 0) << b << " " << n;
  }
}

TEST(TrickedRep, Examples) {
  const PDBQF f{1, 0, 1};
  auto pr = params(4e5, 2, 2, 4.0, 1.0);
  auto m = trick_moduli(pr);
  ASSERT_EQ(m.Wbar, 4u);
  TrickedRep r1(f, 1, m, pr);
  EXPECT_EQ(r1.rho(), oracle::rho(1, 0, 1, 1, 4));
  EXPECT_EQ(r1.rho(), 8u);
  for (std::uint64_t mm : {1u, 3u, 10u, 1234u}) {
    double R = static_cast<double>(oracle::rep_count(1, 0, 1, static_cast<std::int64_t>(4 * mm + 1)));
    double expect = x0_contains(4 * mm + 1, pr) ? 0.0 : 2.0 / (2 * std::numbers::pi) * 4.0 / 8.0 * R;
    EXPECT_DOUBLE_EQ(r1(mm), expect) << mm;
  }
  TrickedRep r3(f, 3, m, pr);
  EXPECT_EQ(r3.rho(), 0u);
  for (std::uint64_t mm = 0; mm < 100; ++mm) EXPECT_EQ(r3(mm), 0);
}

TEST(TrickedRep, ZeroOnExceptionalSet) {
  const PDBQF f{1, 0, 1};
  auto pr = params(4e5, 2, 2, 4.0, 1.0);
  auto m = trick_moduli(pr);
  TrickedRep r(f, 1, m, pr);
  int seen = 0;
  for (std::uint64_t mm = 0; mm < 90'000; ++mm)
    if (x0_contains(4 * mm + 1, pr)) {
      EXPECT_EQ(r(mm), 0);
      ++seen;
    }
  EXPECT_GT(seen, 0);
}

TEST(TrickedRep, AverageNearOneOnAdmissibleClasses) {
  // E_{m<=M} r'_{f,b}(m) = 1 + O(W̄^3 M^{-1/2}); tolerance max(0.05, W̄^3/√M).
  const std::uint64_t M = 100'000;
  for (const PDBQF& f : {PDBQF{1, 0, 1}, PDBQF{1, 1, 1}, PDBQF{1, 0, 2}}) {
    auto pr = params(4.0 * M + 4, 2, 2, 4.0, 1.0);
    auto m = trick_moduli(pr);
    auto reps = build_rep_table(f, m.Wbar * M + m.Wbar);
    SieveTable sieve(m.Wbar * M + m.Wbar);
    for (std::uint64_t b = 0; b < m.Wbar; ++b) {
      if (!residue_set_contains({b}, {Role::qform(f)}, m)) continue;
      TrickedRep r(f, b, m, pr);
      double s = 0;
      for (std::uint64_t mm = 1; mm <= M; ++mm) s += r(mm, &reps, &sieve);
      double mean = s / M;
      double tol = std::max(0.05, std::pow(static_cast<double>(m.Wbar), 3) / std::sqrt(static_cast<double>(M)));
      EXPECT_NEAR(mean, 1.0, tol) << to_string(f) << " b=" << b;
    }
  }
}

TEST(ResidueSet, Examples) {
  auto pr6 = params(1e7, 3, 3, 2.0, 1.0);
  auto m6 = trick_moduli(pr6);
  EXPECT_TRUE(residue_set_contains({5}, {Role::von_mangoldt()}, m6));
  EXPECT_FALSE(residue_set_contains({4}, {Role::von_mangoldt()}, m6));
  auto pr4 = params(4e5, 2, 2, 4.0, 1.0);
  auto m4 = trick_moduli(pr4);
  const PDBQF f{1, 0, 1};
  EXPECT_FALSE(residue_set_contains({3}, {Role::qform(f)}, m4));
  EXPECT_FALSE(residue_set_contains({0}, {Role::qform(f)}, m4));
  EXPECT_TRUE(residue_set_contains({1}, {Role::qform(f)}, m4));
  EXPECT_TRUE(residue_set_contains({2}, {Role::qform(f)}, m4));
  EXPECT_TRUE(residue_set_contains({1, 2}, {Role::von_mangoldt(), Role::qform(f)}, m4));
  EXPECT_FALSE(residue_set_contains({2, 2}, {Role::von_mangoldt(), Role::qform(f)}, m4));
}
