#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qfp/localfac.hpp"

using namespace qfp;

namespace {

// Direct average over (Z/p^m)^d with brute-force residue counts.
Rational oracle_beta(const CorrelationSpec& spec, std::uint64_t p, unsigned m) {
  const auto Q = static_cast<std::int64_t>(ipow(p, m));
  const int d = spec.system.d;
  std::vector<std::int64_t> a(d, 0);
  Rational sum = 0;
  for (;;) {
    Rational term = 1;
    for (std::size_t i = 0; i < spec.system.size() && term != 0; ++i) {
      std::int64_t v = ((spec.system[i](a) % Q) + Q) % Q;
      if (spec.roles[i].kind == Role::Kind::VonMangoldt) {
        if (v % static_cast<std::int64_t>(p) == 0) term = 0;
        else term *= make_rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(p) - 1);
      } else {
        const auto& f = spec.roles[i].form;
        term *= make_rational(static_cast<std::int64_t>(oracle::rho(f.a, f.b, f.c, v, Q)), Q);
      }
    }
    sum += term;
    int c = 0;
    for (; c < d; ++c) {
      if (++a[c] < Q) break;
      a[c] = 0;
    }
    if (c == d) break;
  }
  Rational pts = 1;
  for (int c = 0; c < d; ++c) pts *= Q;
  return sum / pts;
}

// Nonnegative coefficients on a box keep Ψ(K) inside [0, N].
CorrelationSpec random_spec(std::mt19937_64& gen, int max_qforms) {
  for (;;) {
    int d = 1 + static_cast<int>(gen() % 2);
    int t = 1 + static_cast<int>(gen() % 3);
    std::vector<AffineForm> forms;
    std::vector<Role> roles;
    const PDBQF choices[] = {{1, 0, 1}, {1, 1, 1}, {1, 0, 2}, {2, 1, 3}, {1, 0, 5}};
    int qforms = 0;
    std::int64_t N = 0;
    for (int i = 0; i < t; ++i) {
      AffineForm f;
      std::int64_t top = 0;
      for (int j = 0; j < d; ++j) {
        f.linear.push_back(static_cast<std::int64_t>(gen() % 4));
        top += f.linear.back() * 5;
      }
      f.constant = static_cast<std::int64_t>(gen() % 4);
      N = std::max(N, top + f.constant);
      forms.push_back(f);
      if (qforms < max_qforms && gen() % 2) {
        roles.push_back(Role::qform(choices[gen() % 5]));
        ++qforms;
      } else {
        roles.push_back(Role::von_mangoldt());
      }
    }
    AffineSystem sys(d, forms);
    if (!finite_complexity(sys)) continue;
    bool zero = false;
    for (const auto& f : forms) zero = zero || f.linear_is_zero();
    if (zero) continue;
    return CorrelationSpec(sys, roles, box_body(std::vector<std::int64_t>(d, 0), std::vector<std::int64_t>(d, 5)),
                           std::max<std::int64_t>(N, 1));
  }
}

CorrelationSpec single_prime_spec(std::int64_t N = 100) {
  return CorrelationSpec(AffineSystem(1, {{{1}, 0}}), {Role::von_mangoldt()}, box_body({1}, {N}), N);
}

}  // namespace

TEST(ClosedForm, Examples) {
  EXPECT_EQ(beta_p_ap_closed_form(3, 2), Rational(2));
  EXPECT_EQ(beta_p_ap_closed_form(3, 5), make_rational(17, 16));
  EXPECT_EQ(beta_p_ap_closed_form(3, 3), make_rational(1, 4));
  EXPECT_EQ(beta_p_ap_closed_form(3, 7), make_rational(11, 12));
  EXPECT_EQ(beta_p_ap_closed_form(4, 2), Rational(4));
  EXPECT_THROW(beta_p_ap_closed_form(1, 5), DomainError);
}

TEST(ClosedForm, BranchesAgreeAtPEqualsK) {
  // At p = k both displays apply; evaluate the p < k one by hand.
  for (int k : {3, 5, 7}) {
    auto P = static_cast<std::int64_t>(k);
    Rational lead = 1;
    for (int i = 0; i < k; ++i) lead *= make_rational(P, P - 1);
    Rational small = lead * (P % 4 == 1 ? make_rational((P - 1) * (2 * P - 1), P * P * P) : make_rational(P - 1, P * P * P));
    EXPECT_EQ(beta_p_ap_closed_form(k, static_cast<std::uint64_t>(k)), small) << "k=" << k;
  }
}

TEST(BetaTruncated, SinglePrimeSlotIsOne) {
  auto spec = single_prime_spec();
  for (std::uint64_t p : {2, 3, 5, 7})
    for (unsigned m = 1; m <= 3; ++m) EXPECT_EQ(beta_p_truncated(spec, p, m), Rational(1));
}

TEST(BetaTruncated, ApExampleAgainstOracle) {
  auto spec = ap_spec(3, 100);
  EXPECT_EQ(beta_p_truncated(spec, 5, 1), make_rational(17, 16));
  EXPECT_EQ(oracle_beta(spec, 5, 1), make_rational(17, 16));
  EXPECT_EQ(beta_p_truncated(spec, 3, 2), oracle_beta(spec, 3, 2));
  EXPECT_EQ(beta_p_truncated(spec, 2, 3), oracle_beta(spec, 2, 3));
}

TEST(BetaTruncated, GridAndGroupedAgree) {
  for (int k : {3, 4})
    for (std::uint64_t p : {3, 5, 7, 11})
      for (unsigned m : {1u, 2u}) {
        auto spec = ap_spec(k, 100);
        EXPECT_EQ(beta_p_truncated(spec, p, m, BetaPath::grid), beta_p_truncated(spec, p, m, BetaPath::grouped))
            << "k=" << k << " p=" << p << " m=" << m;
      }
  std::mt19937_64 gen(31);
  int checked = 0;
  while (checked < 40) {
    auto spec = random_spec(gen, 2);
    std::uint64_t p = std::vector<std::uint64_t>{3, 5, 7, 11, 13}[gen() % 5];
    if (!detail::grouped_applies(spec, p)) continue;
    unsigned m = 1 + static_cast<unsigned>(gen() % 2);
    auto grid = beta_p_truncated(spec, p, m, BetaPath::grid);
    EXPECT_EQ(grid, beta_p_truncated(spec, p, m, BetaPath::grouped)) << "trial " << checked;
    if (spec.system.d == 1 || p <= 5) EXPECT_EQ(grid, oracle_beta(spec, p, m)) << "trial " << checked;
    ++checked;
  }
}

TEST(BetaTruncated, IndependentOfDepthWithoutForms) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto spec = random_spec(gen, 0);
    for (std::uint64_t p : {2, 3, 5}) {
      auto one = beta_p_truncated(spec, p, 1);
      for (unsigned m = 2; m <= 3; ++m) EXPECT_EQ(beta_p_truncated(spec, p, m), one) << "trial " << trial;
    }
  }
}

TEST(BetaTruncated, LiftInvariantAwayFromDiscriminant) {
  std::mt19937_64 gen(12);
  int checked = 0;
  while (checked < 30) {
    auto spec = random_spec(gen, 2);
    if (spec.s() == 0) continue;
    std::uint64_t p = std::vector<std::uint64_t>{3, 5, 7, 11}[gen() % 4];
    if (stabilization_threshold(spec, p) > 0) continue;
    EXPECT_EQ(beta_p_truncated(spec, p, 1), beta_p_truncated(spec, p, 2)) << "trial " << checked;
    EXPECT_EQ(beta_p_truncated(spec, p, 2), beta_p_truncated(spec, p, 3)) << "trial " << checked;
    ++checked;
  }
}

TEST(BetaTruncated, ForcedZeroAtTwo) {
  CorrelationSpec spec(AffineSystem(1, {{{1}, 0}, {{1}, 1}}), {Role::von_mangoldt(), Role::von_mangoldt()},
                       box_body({1}, {99}), 100, true);
  EXPECT_FALSE(spec.finite);
  EXPECT_EQ(beta_p_truncated(spec, 2, 1), Rational(0));
  EXPECT_THROW(CorrelationSpec(spec.system, spec.roles, spec.body, 100), ConfigError);
}

TEST(BetaTruncated, RejectsDivisorSlots) {
  CorrelationSpec spec(AffineSystem(1, {{{1}, 0}}), {Role::divisor()}, box_body({1}, {10}), 10);
  EXPECT_THROW(beta_p_truncated(spec, 3, 1), DomainError);
}

TEST(BetaStabilized, Examples) {
  auto spec = ap_spec(3, 100);
  auto r2 = beta_p_stabilized(spec, 2, 6);
  EXPECT_TRUE(r2.stabilized);
  EXPECT_LE(r2.depth, 3u);
  EXPECT_EQ(r2.value, Rational(2));
  auto r7 = beta_p_stabilized(spec, 7, 4);
  EXPECT_TRUE(r7.stabilized);
  EXPECT_EQ(r7.value, make_rational(11, 12));
  auto s0 = beta_p_stabilized(single_prime_spec(), 5, 3);
  EXPECT_TRUE(s0.stabilized);
  EXPECT_EQ(s0.depth, 1u);
  EXPECT_EQ(s0.error_bound, 0);
  EXPECT_THROW(beta_p_stabilized(spec, 2, 2), DomainError);
}

TEST(BetaStabilized, MatchesClosedForm) {
  for (int k : {3, 4})
    for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17}) {
      auto spec = ap_spec(k, 1000);
      auto r = beta_p_stabilized(spec, p, stabilization_threshold(spec, p) + 3);
      EXPECT_TRUE(r.stabilized) << "k=" << k << " p=" << p;
      EXPECT_EQ(r.value, beta_p_ap_closed_form(k, p)) << "k=" << k << " p=" << p;
    }
}

TEST(BetaStabilized, UnstabilizedReportsBound) {
  // Λ(x) R(4x+2) at p = 2: β_2(m) = 1, 1, 0, 0, ... so depth M0 = 2 alone
  // cannot see the drop.
  CorrelationSpec spec(AffineSystem(1, {{{1}, 0}, {{4}, 2}}), {Role::von_mangoldt(), Role::qform(PDBQF(1, 0, 1))},
                       box_body({0}, {10}), 42, true);
  auto capped = beta_p_stabilized(spec, 2, 3);
  EXPECT_FALSE(capped.stabilized);
  EXPECT_EQ(capped.depth, 3u);
  EXPECT_GT(capped.error_bound, 0);
  auto full = beta_p_stabilized(spec, 2, 6);
  EXPECT_TRUE(full.stabilized);
  EXPECT_EQ(full.value, Rational(0));
  EXPECT_EQ(full.depth, 3u);
}

TEST(SingularProduct, TrivialSystem) {
  auto sp = singular_product(single_prime_spec(), 50);
  EXPECT_EQ(sp.exact, Rational(1));
  EXPECT_EQ(sp.tail_halfwidth, 0);
  EXPECT_TRUE(sp.unstabilized.empty());
}

TEST(SingularProduct, ForcedZero) {
  CorrelationSpec spec(AffineSystem(1, {{{1}, 0}, {{1}, 1}}), {Role::von_mangoldt(), Role::von_mangoldt()},
                       box_body({1}, {99}), 100, true);
  auto sp = singular_product(spec, 30);
  EXPECT_EQ(sp.exact, Rational(0));
  EXPECT_EQ(sp.value, 0);
}

TEST(SingularProduct, ApSelfConsistency) {
  auto spec = ap_spec(3, 1000);
  auto p50 = singular_product(spec, 50, 3, 2);
  auto p100 = singular_product(spec, 100, 3, 2);
  EXPECT_TRUE(p100.unstabilized.empty());
  RecordProperty("c50", std::to_string(p50.fitted_c));
  EXPECT_LE(std::abs(p100.value - p50.value), std::abs(p50.value) * p50.fitted_c / 50);
  // product of the closed forms
  Rational expect = 1;
  for (auto p : sieve_primes(100)) expect *= beta_p_ap_closed_form(3, p);
  EXPECT_EQ(p100.exact, expect);
}

TEST(SingularProduct, WorkerCountDoesNotMatter) {
  auto spec = ap_spec(4, 1000);
  EXPECT_EQ(singular_product(spec, 60, 3, 1).exact, singular_product(spec, 60, 3, 4).exact);
}

TEST(SingularProduct, TailConstantDoesNotGrow) {
  // p^2 |β_p - 1| over p in [k, 100], compared between the two halves.
  std::vector<CorrelationSpec> specs = {ap_spec(3, 1000), ap_spec(4, 1000)};
  specs.emplace_back(AffineSystem(2, {{{1, 0}, 0}, {{0, 1}, 0}, {{1, 1}, 0}}),
                     std::vector<Role>(3, Role::von_mangoldt()), box_body({0, 0}, {50, 50}), 100);
  specs.emplace_back(AffineSystem(2, {{{1, 0}, 0}, {{1, 2}, 0}, {{0, 1}, 0}}),
                     std::vector<Role>{Role::von_mangoldt(), Role::von_mangoldt(), Role::qform(PDBQF(1, 1, 1))},
                     box_body({0, 0}, {30, 30}), 100);
  specs.emplace_back(AffineSystem(2, {{{1, 0}, 0}, {{1, 1}, 0}, {{0, 1}, 0}}),
                     std::vector<Role>{Role::von_mangoldt(), Role::qform(PDBQF(1, 0, 2)), Role::qform(PDBQF(1, 0, 1))},
                     box_body({0, 0}, {40, 40}), 100);
  double low = 0, high = 0;
  for (const auto& spec : specs)
    for (auto p : sieve_primes(100)) {
      if (p < 5) continue;
      double dp = static_cast<double>(p);
      double c = dp * dp * std::abs(to_double(beta_p_stabilized(spec, p, stabilization_threshold(spec, p) + 3).value - 1));
      (p <= 50 ? low : high) = std::max(p <= 50 ? low : high, c);
    }
  RecordProperty("c_low", std::to_string(low));
  RecordProperty("c_high", std::to_string(high));
  EXPECT_GT(low, 0);
  EXPECT_LE(high, 1.5 * low);
}

TEST(BetaInfinity, Examples) {
  auto b = beta_infinity(ap_spec(3, 101));
  EXPECT_NEAR(b.value, 2500 * std::numbers::pi, 1e-9);
  EXPECT_EQ(b.abs_error, 0);
  EXPECT_EQ(beta_infinity(single_prime_spec(100)).value, 99);
  CorrelationSpec two(AffineSystem(2, {{{1, 0}, 0}, {{0, 1}, 0}}),
                      {Role::qform(PDBQF(1, 0, 1)), Role::qform(PDBQF(1, 0, 1))}, box_body({1, 1}, {10, 10}), 10);
  EXPECT_NEAR(beta_infinity(two).value, 81 * std::numbers::pi * std::numbers::pi, 1e-9);
}

TEST(Spec, VertexCheck) {
  EXPECT_THROW(CorrelationSpec(AffineSystem(1, {{{1}, 0}}), {Role::von_mangoldt()}, box_body({1}, {200}), 100),
               ConfigError);
  EXPECT_THROW(CorrelationSpec(AffineSystem(1, {{{1}, -5}}), {Role::von_mangoldt()}, box_body({1}, {10}), 100),
               ConfigError);
  EXPECT_THROW(CorrelationSpec(AffineSystem(1, {{{1}, 0}}), {}, box_body({1}, {10}), 100), ConfigError);
}
