#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qfp/linsys.hpp"

using namespace qfp;

namespace {

AffineSystem sys(int d, std::vector<AffineForm> f) { return AffineSystem(d, std::move(f)); }

Rational oracle_alpha(const DensityQuery& q) {
  std::vector<std::vector<std::int64_t>> L;
  std::vector<std::int64_t> c, m;
  for (std::size_t i = 0; i < q.system.size(); ++i) {
    L.push_back(q.system[i].linear);
    c.push_back(q.system[i].constant);
    m.push_back(static_cast<std::int64_t>(q.moduli[i]));
  }
  auto [h, t] = oracle::alpha_count(L, c, m, q.system.d);
  return Rational(BigInt(h), BigInt(t));
}

DensityQuery random_query(std::mt19937_64& gen, std::uint64_t p) {
  int d = 1 + static_cast<int>(gen() % 3);
  int t = 1 + static_cast<int>(gen() % 4);
  std::vector<AffineForm> forms;
  std::vector<std::uint64_t> moduli;
  for (int i = 0; i < t; ++i) {
    AffineForm f;
    for (int j = 0; j < d; ++j) f.linear.push_back(static_cast<std::int64_t>(gen() % 9) - 4);
    f.constant = static_cast<std::int64_t>(gen() % 11) - 5;
    forms.push_back(f);
    moduli.push_back(ipow(p, static_cast<unsigned>(gen() % 4)));
  }
  return DensityQuery(AffineSystem(d, forms), moduli);
}

}  // namespace

TEST(FiniteComplexity, Examples) {
  EXPECT_TRUE(finite_complexity(ap_system(3)));
  EXPECT_FALSE(finite_complexity(sys(1, {{{1}, 0}, {{2}, 0}})));
  EXPECT_FALSE(finite_complexity(sys(1, {{{1}, 1}, {{1}, 2}})));
  EXPECT_FALSE(finite_complexity(sys(2, {{{0, 0}, 1}, {{1, 0}, 0}})));
}

TEST(ExceptionalPrimes, Examples) {
  EXPECT_EQ(exceptional_primes(sys(2, {{{1, 0}, 0}, {{1, 2}, 0}}), 10), (std::set<std::uint64_t>{2}));
  EXPECT_TRUE(exceptional_primes(sys(2, {{{1, 0}, 0}, {{0, 1}, 0}}), 10).empty());
  EXPECT_EQ(exceptional_primes(sys(2, {{{1, 0}, 0}, {{1, 6}, 0}}), 10), (std::set<std::uint64_t>{2, 3}));
  EXPECT_THROW(exceptional_primes(sys(1, {{{1}, 0}, {{2}, 0}}), 10), DomainError);
}

TEST(ExceptionalPrimes, MatchesReductionOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AffineForm> forms;
    for (int i = 0; i < 3; ++i) forms.push_back({{static_cast<std::int64_t>(gen() % 13) - 6, static_cast<std::int64_t>(gen() % 13) - 6}, 0});
    AffineSystem s(2, forms);
    if (!finite_complexity(s)) continue;
    std::set<std::uint64_t> expect;
    for (std::uint64_t p : oracle::primes_upto(30)) {
      auto P = static_cast<std::int64_t>(p);
      auto r = [&](std::int64_t v) { return ((v % P) + P) % P; };
      bool bad = false;
      for (int i = 0; i < 3; ++i) {
        if (r(forms[i].linear[0]) == 0 && r(forms[i].linear[1]) == 0) bad = true;
        for (int j = i + 1; j < 3; ++j)
          if (r(forms[i].linear[0] * forms[j].linear[1] - forms[i].linear[1] * forms[j].linear[0]) == 0) bad = true;
      }
      if (bad) expect.insert(p);
    }
    EXPECT_EQ(exceptional_primes(s, 30), expect);
  }
}

TEST(AlphaBruteForce, Examples) {
  EXPECT_EQ(alpha_bruteforce(DensityQuery(sys(1, {{{1}, 0}}), {9})), make_rational(1, 9));
  EXPECT_EQ(alpha_bruteforce(DensityQuery(sys(2, {{{1, 0}, 0}, {{1, 1}, 0}}), {3, 3})), make_rational(1, 9));
  EXPECT_EQ(alpha_bruteforce(DensityQuery(sys(1, {{{1}, 0}, {{2}, 0}}), {2, 2})), make_rational(1, 2));
  EXPECT_THROW(alpha_bruteforce(DensityQuery(sys(3, {{{1, 1, 1}, 0}}), {1000})), BudgetError);
}

TEST(AlphaHensel, Examples) {
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(2, {{{1, 1}, 1}}), {125})), make_rational(1, 125));
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(2, {{{1, 0}, 0}, {{1, 1}, 0}}), {9, 3})), make_rational(1, 27));
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(1, {{{2}, 0}}), {4})), make_rational(1, 2));
  EXPECT_THROW(alpha_hensel(DensityQuery(sys(1, {{{1}, 0}, {{1}, 1}}), {2, 3})), DomainError);
}

TEST(AlphaHensel, ZeroFormsAreHandled) {
  // ψ = 0 is always divisible; ψ = 3 never divisible by 9; ψ = 9x has α = 1.
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(1, {{{0}, 0}}), {9})), Rational(1));
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(1, {{{0}, 3}}), {9})), Rational(0));
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(1, {{{9}, 0}}), {9})), Rational(1));
  // ψ = p^k ψ' gives α ≤ p^{k-m}.
  EXPECT_EQ(alpha_hensel(DensityQuery(sys(1, {{{3}, 0}}), {27})), make_rational(1, 9));
}

TEST(AlphaHensel, AgreesWithBruteForceOnRandomQueries) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::uint64_t p = std::vector<std::uint64_t>{2, 3, 5}[trial % 3];
    auto q = random_query(gen, p);
    auto bf = alpha_bruteforce(q);
    EXPECT_EQ(alpha_hensel(q), bf) << "trial " << trial;
    EXPECT_EQ(bf, oracle_alpha(q)) << "trial " << trial;
  }
}

TEST(Alpha, Examples) {
  EXPECT_EQ(alpha(DensityQuery(sys(2, {{{1, 0}, 0}, {{1, 1}, 0}}), {6, 2})), make_rational(1, 12));
  EXPECT_EQ(alpha(DensityQuery(sys(2, {{{1, 0}, 0}, {{1, 1}, 0}}), {1, 1})), Rational(1));
  EXPECT_EQ(alpha(DensityQuery(sys(1, {{{1}, 0}}), {12})), make_rational(1, 12));
}

TEST(Alpha, CrtMultiplicativityAgainstBruteForce) {
  std::mt19937_64 gen(99);
  const std::uint64_t mods[] = {1, 2, 3, 4, 5, 6, 9, 10, 12, 15, 18, 20, 30};
  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + static_cast<int>(gen() % 2);
    int t = 1 + static_cast<int>(gen() % 3);
    std::vector<AffineForm> forms;
    std::vector<std::uint64_t> moduli;
    for (int i = 0; i < t; ++i) {
      AffineForm f;
      for (int j = 0; j < d; ++j) f.linear.push_back(static_cast<std::int64_t>(gen() % 7) - 3);
      f.constant = static_cast<std::int64_t>(gen() % 7) - 3;
      forms.push_back(f);
      moduli.push_back(mods[gen() % 13]);
    }
    DensityQuery q(AffineSystem(d, forms), moduli);
    EXPECT_EQ(alpha(q), alpha_bruteforce(q)) << "trial " << trial;
  }
}

TEST(Alpha, SingleFormBound) {
  // α((ψ), p^m) ≤ p^{-m} for ψ nonzero mod p.
  std::mt19937_64 gen(1);
  for (std::uint64_t p : {2, 3, 5})
    for (int trial = 0; trial < 40; ++trial) {
      int d = 1 + static_cast<int>(gen() % 3);
      AffineForm f;
      bool nonzero = false;
      for (int j = 0; j < d; ++j) {
        f.linear.push_back(static_cast<std::int64_t>(gen() % 11) - 5);
        nonzero = nonzero || f.linear.back() % static_cast<std::int64_t>(p) != 0;
      }
      if (!nonzero) continue;
      f.constant = static_cast<std::int64_t>(gen() % 11) - 5;
      for (unsigned m = 1; m <= 4; ++m)
        EXPECT_LE(alpha(DensityQuery(AffineSystem(d, {f}), {ipow(p, m)})),
                  Rational(BigInt(1), BigInt(ipow(p, m))));
    }
}

TEST(Alpha, PairBound) {
  // For systems of finite complexity mod p: α ≤ p^{-max_{i≠j}(a_i + a_j)}.
  std::mt19937_64 gen(8);
  int checked = 0;
  while (checked < 150) {
    std::uint64_t p = std::vector<std::uint64_t>{2, 3, 5}[gen() % 3];
    auto q = random_query(gen, p);
    if (q.system.size() < 2 || q.system.d < 2) continue;
    if (!finite_complexity(q.system) || exceptional_primes(q.system, p).count(p)) continue;
    unsigned best = 0;
    for (std::size_t i = 0; i < q.moduli.size(); ++i)
      for (std::size_t j = 0; j < q.moduli.size(); ++j)
        if (i != j)
          best = std::max(best, valuation(static_cast<std::int64_t>(q.moduli[i]), p) +
                                    valuation(static_cast<std::int64_t>(q.moduli[j]), p));
    EXPECT_LE(alpha(q), Rational(BigInt(1), boost::multiprecision::pow(BigInt(p), best)));
    ++checked;
  }
}

TEST(SquareDivisibility, Examples) {
  auto line = box_body({1}, {100});
  EXPECT_EQ(square_divisibility_count(sys(1, {{{1}, 0}}), line, 3), 11u);
  EXPECT_EQ(square_divisibility_count(sys(1, {{{1}, 0}, {{1}, 1}}), line, 5), 8u);
  ConvexBody empty({{{Rational(1)}, Rational(-1)}, {{Rational(-1)}, Rational(-1)}}, {-5}, {5});
  EXPECT_EQ(square_divisibility_count(sys(1, {{{1}, 0}}), empty, 3), 0u);
  EXPECT_THROW(square_divisibility_count(sys(1, {{{1}, 0}, {{1}, 5}}), line, 5), DomainError);
  EXPECT_THROW(square_divisibility_count(sys(1, {{{5}, 0}}), line, 5), DomainError);
}

TEST(SquareDivisibility, BoundWithOneFittedConstant) {
  // count ≤ C (p^{-2} Vol(K) + B^{d-1} p^2) on a fixed grid; C is the max
  // ratio and must stay moderate.
  auto s = sys(2, {{{1, 0}, 0}, {{1, 1}, 0}, {{1, 2}, 0}});
  double C = 0;
  for (std::int64_t B : {50, 100, 200})
    for (std::uint64_t p : {5, 7, 11, 13}) {
      auto body = box_body({1, 1}, {B, B});
      double vol = static_cast<double>((B - 1) * (B - 1));
      double bound = vol / static_cast<double>(p * p) + static_cast<double>(B * p * p);
      C = std::max(C, static_cast<double>(square_divisibility_count(s, body, p)) / bound);
    }
  RecordProperty("fitted_C", std::to_string(C));
  EXPECT_LT(C, 5.0);
}
