#pragma once

// Positive definite binary quadratic forms f(x,y) = ax^2 + bxy + cy^2.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/errors.hpp"
#include "qfp/parallel.hpp"

namespace qfp {

struct PDBQF {
  std::int64_t a = 1, b = 0, c = 1;

  PDBQF() = default;
  PDBQF(std::int64_t a_, std::int64_t b_, std::int64_t c_) : a(a_), b(b_), c(c_) {
    if (a <= 0 || discriminant() >= 0)
      throw DomainError("form (" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) +
                        ") is not positive definite");
  }

  std::int64_t discriminant() const { return b * b - 4 * a * c; }

  std::int64_t operator()(std::int64_t x, std::int64_t y) const { return a * x * x + b * x * y + c * y * y; }

  friend bool operator==(const PDBQF&, const PDBQF&) = default;
};

inline std::string to_string(const PDBQF& f) {
  return "(" + std::to_string(f.a) + "," + std::to_string(f.b) + "," + std::to_string(f.c) + ")";
}

namespace detail {

inline std::int64_t isqrt(std::int64_t n) {
  if (n <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Largest |y| with f(x,y) <= n for some real x: 4a n + D y^2 >= 0.
inline std::int64_t y_extent(const PDBQF& f, std::int64_t n) {
  std::int64_t negD = -f.discriminant();
  return detail::isqrt(4 * f.a * n / negD) + 1;
}

// Integer x-interval with f(x,y) <= n, or lo > hi when empty.
inline std::pair<std::int64_t, std::int64_t> x_interval(const PDBQF& f, std::int64_t y, std::int64_t n) {
  std::int64_t disc = 4 * f.a * n + f.discriminant() * y * y;
  if (disc < 0) return {1, 0};
  long double s = std::sqrt(static_cast<long double>(disc));
  auto lo = static_cast<std::int64_t>(std::floor((-f.b * y - s) / (2.0L * f.a))) - 1;
  auto hi = static_cast<std::int64_t>(std::ceil((-f.b * y + s) / (2.0L * f.a))) + 1;
  while (lo <= hi && f(lo, y) > n) ++lo;
  while (hi >= lo && f(hi, y) > n) --hi;
  return {lo, hi};
}

}  // namespace detail

// R_f(n) = #{(x,y) : f(x,y) = n}; zero for n < 0. Solves the quadratic in x
// for each admissible y.
inline std::uint64_t representation_count(const PDBQF& f, std::int64_t n) {
  if (n < 0) return 0;
  if (n == 0) return 1;
  std::uint64_t count = 0;
  std::int64_t Y = detail::y_extent(f, n);
  for (std::int64_t y = -Y; y <= Y; ++y) {
    std::int64_t disc = 4 * f.a * n + f.discriminant() * y * y;
    if (disc < 0) continue;
    std::int64_t s = detail::isqrt(disc);
    if (s * s != disc) continue;
    for (std::int64_t num : {-f.b * y + s, -f.b * y - s}) {
      if (num % (2 * f.a) == 0) ++count;
      if (s == 0) break;
    }
  }
  return count;
}

struct RepTable {
  PDBQF form;
  std::uint64_t limit = 0;
  std::vector<std::uint32_t> counts;

  std::uint32_t operator[](std::int64_t n) const {
    return (n < 0 || static_cast<std::uint64_t>(n) > limit) ? 0 : counts[n];
  }
};

inline constexpr std::uint64_t kRepTableMemoryBudget = std::uint64_t{1} << 32;  // bytes

// Counts every lattice point with f(x,y) <= limit once. Rows in y are
// distributed over workers; increments are atomic so the merge order does
// not matter.
inline RepTable build_rep_table(const PDBQF& f, std::uint64_t limit, unsigned jobs = 1) {
  if ((limit + 1) * sizeof(std::uint32_t) > kRepTableMemoryBudget)
    throw ConfigError("representation table up to " + std::to_string(limit) + " exceeds the memory budget");
  RepTable t{f, limit, std::vector<std::uint32_t>(limit + 1, 0)};
  auto n = static_cast<std::int64_t>(limit);
  std::int64_t Y = detail::y_extent(f, n);
  std::size_t rows = static_cast<std::size_t>(2 * Y + 1);
  auto sweep = [&](std::size_t row, auto&& bump) {
    std::int64_t y = static_cast<std::int64_t>(row) - Y;
    auto [lo, hi] = detail::x_interval(f, y, n);
    if (lo > hi) return;
    std::int64_t v = f(lo, y);
    for (std::int64_t x = lo; x <= hi; ++x) {
      bump(static_cast<std::size_t>(v));
      v += f.a * (2 * x + 1) + f.b * y;
    }
  };
  if (jobs == 0) jobs = default_jobs();
  if (jobs <= 1) {
    for (std::size_t r = 0; r < rows; ++r) sweep(r, [&](std::size_t i) { ++t.counts[i]; });
  } else {
    parallel_for(rows, jobs, [&](std::size_t r) {
      sweep(r, [&](std::size_t i) { std::atomic_ref<std::uint32_t>(t.counts[i]).fetch_add(1, std::memory_order_relaxed); });
    });
  }
  return t;
}

// ---------------------------------------------------------------------------
// Residue counts ρ_{f,β}(q)

// Full table: out[r] = #{(x,y) in [q]^2 : f(x,y) = r mod q}.
inline std::vector<std::uint64_t> residue_rep_table(const PDBQF& f, std::uint64_t q) {
  if (q == 0) throw DomainError("modulus must be positive");
  if (q > 100'000) throw BudgetError("residue table modulus " + std::to_string(q) + " is too large");
  std::vector<std::uint64_t> out(q, 0);
  auto Q = static_cast<std::int64_t>(q);
  std::vector<std::int64_t> ax2(q), cy2(q);
  for (std::int64_t x = 0; x < Q; ++x) {
    ax2[x] = floor_mod(f.a % Q * (x * x % Q), Q);
    cy2[x] = floor_mod(f.c % Q * (x * x % Q), Q);
  }
  std::int64_t bm = floor_mod(f.b, Q);
  for (std::int64_t x = 0; x < Q; ++x) {
    std::int64_t bx = bm * x % Q;
    std::int64_t cross = 0;  // b x y mod q, stepped in y
    for (std::int64_t y = 0; y < Q; ++y) {
      std::int64_t v = ax2[x] + cross + cy2[y];
      v %= Q;
      ++out[v];
      cross += bx;
      if (cross >= Q) cross -= Q;
    }
  }
  return out;
}

inline std::uint64_t residue_rep_count_bruteforce(const PDBQF& f, std::int64_t beta, std::uint64_t q) {
  if (q == 0) throw DomainError("modulus must be positive");
  if (q == 1) return 1;
  auto Q = static_cast<std::int64_t>(q);
  std::int64_t target = floor_mod(beta, Q);
  std::uint64_t count = 0;
  for (std::int64_t x = 0; x < Q; ++x) {
    std::int64_t ax2 = floor_mod(f.a % Q * (x * x % Q), Q);
    std::int64_t bx = floor_mod(f.b % Q * x, Q);
    for (std::int64_t y = 0; y < Q; ++y) {
      std::int64_t v = (ax2 + bx * y % Q + floor_mod(f.c % Q * (y * y % Q), Q)) % Q;
      if (v == target) ++count;
    }
  }
  return count;
}

// (1 - χ_D(p)/p) Σ_{k=0}^{m} 1_{p^k | β} χ_D(p)^k, valid for p ∤ D, β ≢ 0 mod p^m.
inline Rational residue_density_closed_form(const PDBQF& f, std::int64_t beta, std::uint64_t p, unsigned m) {
  std::int64_t D = f.discriminant();
  if (D % static_cast<std::int64_t>(p) == 0)
    throw DomainError("closed form needs p not dividing D (p=" + std::to_string(p) + ", D=" + std::to_string(D) + ")");
  if (m == 0) throw DomainError("closed form needs m >= 1");
  std::uint64_t pm = ipow(p, m);
  if (floor_mod(beta, static_cast<std::int64_t>(pm)) == 0)
    throw DomainError("closed form needs beta nonzero mod p^m");
  int chi = kronecker_symbol(D, static_cast<std::int64_t>(p));
  unsigned v = valuation(beta, p);
  Rational sum = 0;
  int power = 1;
  for (unsigned k = 0; k <= m && k <= v; ++k) {
    sum += power;
    power *= chi;
  }
  return (Rational(1) - make_rational(chi, static_cast<std::int64_t>(p))) * sum;
}

// Count through CRT: per prime power, the closed form when it applies (odd
// p ∤ D, β ≢ 0), brute force otherwise.
inline std::uint64_t residue_rep_count_crt(const PDBQF& f, std::int64_t beta, std::uint64_t q) {
  if (q == 0) throw DomainError("modulus must be positive");
  std::uint64_t total = 1;
  std::int64_t D = f.discriminant();
  for (const auto& pp : factorize_trial(q).factors) {
    std::uint64_t pe = ipow(pp.p, pp.e);
    std::uint64_t local;
    if (pp.p != 2 && D % static_cast<std::int64_t>(pp.p) != 0 && floor_mod(beta, static_cast<std::int64_t>(pe)) != 0) {
      Rational r = residue_density_closed_form(f, beta, pp.p, pp.e) * Rational(BigInt(pe));
      local = boost::multiprecision::numerator(r).convert_to<std::uint64_t>();
    } else {
      if (pe > 30'000) throw BudgetError("brute-force residue count at modulus " + std::to_string(pe) + " is too large");
      local = residue_rep_count_bruteforce(f, beta, pe);
    }
    total *= local;
  }
  return total;
}

inline constexpr std::uint64_t kResidueBruteForceLimit = 10'000;

inline std::uint64_t residue_rep_count(const PDBQF& f, std::int64_t beta, std::uint64_t q) {
  return q <= kResidueBruteForceLimit ? residue_rep_count_bruteforce(f, beta, q) : residue_rep_count_crt(f, beta, q);
}

// ρ_{f,b}(p^α)/p^α in the range where it no longer depends on α.
inline Rational residue_density_stabilized(const PDBQF& f, std::int64_t b, std::uint64_t p, unsigned alpha) {
  unsigned vD = valuation(f.discriminant(), p);
  if (alpha < vD || alpha == 0)
    throw DomainError("stabilized density needs alpha >= v_p(D) = " + std::to_string(vD));
  std::uint64_t pa = ipow(p, alpha);
  std::int64_t br = floor_mod(b, static_cast<std::int64_t>(pa));
  if (br == 0) throw DomainError("stabilized density needs b nonzero mod p^alpha");
  // At p = 2 the value can still move at alpha = v_2(D), e.g. x^2+y^2 with
  // b = 2: ρ(4)/4 = 1 but ρ(8)/8 = 2. One extra level per factor of 2 in b
  // and D is enough.
  if (p == 2 && alpha < valuation(br, 2) + vD + 1)
    throw DomainError("stabilized density at p = 2 needs alpha >= v_2(b) + v_2(D) + 1 = " +
                      std::to_string(valuation(br, 2) + vD + 1));
  return Rational(BigInt(residue_rep_count(f, b, pa)), BigInt(pa));
}

}  // namespace qfp
