#pragma once

// Integer-arithmetic substrate: sieves, factorization, multiplicative
// functions, the Kronecker symbol and exact rationals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qfp/errors.hpp"

namespace qfp {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  if (den == 0) throw DomainError("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  const BigInt& den = boost::multiprecision::denominator(r);
  if (den == 1) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" + den.str();
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// p^e, or nullopt on unsigned 64-bit overflow.
inline std::optional<std::uint64_t> checked_pow(std::uint64_t p, unsigned e) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (p != 0 && r > std::numeric_limits<std::uint64_t>::max() / p) return std::nullopt;
    r *= p;
  }
  return r;
}

inline std::uint64_t ipow(std::uint64_t p, unsigned e) {
  auto r = checked_pow(p, e);
  if (!r) throw BudgetError("integer power " + std::to_string(p) + "^" + std::to_string(e) + " overflows 64 bits");
  return *r;
}

// v_p(n) for n != 0; returns a large sentinel for n == 0.
inline unsigned valuation(std::int64_t n, std::uint64_t p) {
  if (n == 0) return std::numeric_limits<unsigned>::max();
  std::uint64_t m = n < 0 ? static_cast<std::uint64_t>(-(n + 1)) + 1 : static_cast<std::uint64_t>(n);
  unsigned v = 0;
  while (m % p == 0) {
    m /= p;
    ++v;
  }
  return v;
}

// Error-free compensated accumulation (Neumaier's variant of Kahan).
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  NeumaierSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Sieves

namespace detail {

inline std::vector<std::uint32_t> simple_sieve(std::uint64_t limit) {
  std::vector<std::uint32_t> primes;
  if (limit < 2) return primes;
  std::vector<bool> composite(limit + 1, false);
  for (std::uint64_t i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    primes.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = true;
  }
  return primes;
}

}  // namespace detail

inline constexpr std::uint64_t kSegmentedSieveThreshold = 10'000'000;

// All primes in [2, limit], ascending. Above 10^7 a segmented sieve keeps the
// working set at one segment.
inline std::vector<std::uint64_t> sieve_primes(std::uint64_t limit) {
  std::vector<std::uint64_t> out;
  if (limit < 2) return out;
  if (limit <= kSegmentedSieveThreshold) {
    for (auto p : detail::simple_sieve(limit)) out.push_back(p);
    return out;
  }
  auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(limit)));
  while ((root + 1) * (root + 1) <= limit) ++root;
  while (root * root > limit) --root;
  auto base = detail::simple_sieve(root);
  for (auto p : base) out.push_back(p);
  constexpr std::uint64_t kSegment = 1 << 20;
  std::vector<char> mark(kSegment);
  for (std::uint64_t lo = root + 1; lo <= limit; lo += kSegment) {
    std::uint64_t hi = std::min(limit, lo + kSegment - 1);
    std::fill(mark.begin(), mark.end(), 0);
    for (std::uint64_t p : base) {
      if (p * p > hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t j = start; j <= hi; j += p) mark[j - lo] = 1;
    }
    for (std::uint64_t n = lo; n <= hi; ++n)
      if (!mark[n - lo]) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Factorization

struct PrimePower {
  std::uint64_t p;
  unsigned e;
  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

// n = prod p^e with primes strictly increasing and exponents >= 1.
struct FactoredInteger {
  std::uint64_t n = 1;
  std::vector<PrimePower> factors;

  unsigned valuation(std::uint64_t p) const {
    for (const auto& f : factors)
      if (f.p == p) return f.e;
    return 0;
  }
  bool is_prime() const { return factors.size() == 1 && factors[0].e == 1; }
  bool is_prime_power() const { return factors.size() == 1; }
};

// Trial division; intended for moderate n (sqrt(n) iterations worst case).
inline FactoredInteger factorize_trial(std::uint64_t n) {
  if (n == 0) throw DomainError("cannot factorize 0");
  FactoredInteger out;
  out.n = n;
  auto take = [&](std::uint64_t p) {
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e) out.factors.push_back({p, e});
  };
  take(2);
  take(3);
  for (std::uint64_t p = 5; p * p <= n; p += 6) {
    take(p);
    take(p + 2);
  }
  if (n > 1) out.factors.push_back({n, 1});
  return out;
}

// Smallest-prime-factor table, built once and then shared read-only.
class SieveTable {
 public:
  SieveTable() = default;
  explicit SieveTable(std::uint64_t limit) : limit_(limit) {
    if (limit >= std::numeric_limits<std::uint32_t>::max())
      throw BudgetError("smallest-prime-factor table limit must stay below 2^32");
    spf_.assign(limit + 1, 0);
    for (std::uint64_t i = 2; i <= limit; ++i) {
      if (spf_[i] == 0) {
        spf_[i] = static_cast<std::uint32_t>(i);
        primes_.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t p : primes_) {
        std::uint64_t m = static_cast<std::uint64_t>(p) * i;
        if (p > spf_[i] || m > limit) break;
        spf_[m] = p;
      }
    }
  }

  std::uint64_t limit() const { return limit_; }
  const std::vector<std::uint32_t>& primes() const { return primes_; }
  std::uint32_t smallest_factor(std::uint64_t n) const { return spf_.at(n); }

  bool is_prime(std::uint64_t n) const {
    if (n <= limit_) return n >= 2 && spf_[n] == n;
    return n >= 2 && factorize_trial(n).is_prime();
  }

  // Uses the table when n is covered, trial division otherwise.
  FactoredInteger factorize(std::uint64_t n) const {
    if (n == 0) throw DomainError("cannot factorize 0");
    if (n > limit_) return factorize_trial(n);
    FactoredInteger out;
    out.n = n;
    while (n > 1) {
      std::uint64_t p = spf_[n];
      unsigned e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      out.factors.push_back({p, e});
    }
    return out;
  }

 private:
  std::uint64_t limit_ = 0;
  std::vector<std::uint32_t> spf_;
  std::vector<std::uint32_t> primes_;
};

// ---------------------------------------------------------------------------
// von Mangoldt

// Prime-power table: n -> (p, a) when n = p^a. Values stay symbolic; log p is
// only taken when a caller sums them.
class VonMangoldtTable {
 public:
  explicit VonMangoldtTable(std::uint64_t limit) : base_(limit + 1, 0), exponent_(limit + 1, 0) {
    for (std::uint64_t p : sieve_primes(limit)) {
      std::uint64_t q = p;
      unsigned a = 1;
      for (;;) {
        base_[q] = static_cast<std::uint32_t>(p);
        exponent_[q] = static_cast<std::uint8_t>(a);
        if (q > limit / p) break;
        q *= p;
        ++a;
      }
    }
  }

  std::uint64_t limit() const { return base_.size() - 1; }

  std::optional<PrimePower> entry(std::uint64_t n) const {
    if (n >= base_.size() || base_[n] == 0) return std::nullopt;
    return PrimePower{base_[n], exponent_[n]};
  }

  double lambda(std::uint64_t n) const {
    if (n >= base_.size() || base_[n] == 0) return 0.0;
    return std::log(static_cast<double>(base_[n]));
  }

  // Dense Λ values for fast summation loops.
  std::vector<double> dense() const {
    std::vector<double> out(base_.size(), 0.0);
    for (std::size_t n = 0; n < base_.size(); ++n)
      if (base_[n]) out[n] = std::log(static_cast<double>(base_[n]));
    return out;
  }

 private:
  std::vector<std::uint32_t> base_;
  std::vector<std::uint8_t> exponent_;
};

// ---------------------------------------------------------------------------
// Multiplicative functions

inline std::uint64_t euler_phi(std::uint64_t n) {
  if (n == 0) throw DomainError("euler_phi needs n >= 1");
  std::uint64_t r = n;
  for (const auto& f : factorize_trial(n).factors) r = r / f.p * (f.p - 1);
  return r;
}

inline std::uint64_t euler_phi(const FactoredInteger& f) {
  std::uint64_t r = f.n;
  for (const auto& pp : f.factors) r = r / pp.p * (pp.p - 1);
  return r;
}

inline int mobius(const FactoredInteger& f) {
  for (const auto& pp : f.factors)
    if (pp.e > 1) return 0;
  return (f.factors.size() % 2 == 0) ? 1 : -1;
}

inline std::uint64_t divisor_count(const FactoredInteger& f) {
  std::uint64_t t = 1;
  for (const auto& pp : f.factors) t *= pp.e + 1;
  return t;
}

// τ(n) for 0 <= n <= limit (τ(0) = 0).
inline std::vector<std::uint32_t> divisor_count_table(std::uint64_t limit) {
  std::vector<std::uint32_t> tau(limit + 1, 0);
  if (limit == 0) return tau;
  // Additive sieve over divisors; O(limit log limit).
  for (std::uint64_t d = 1; d <= limit; ++d)
    for (std::uint64_t m = d; m <= limit; m += d) ++tau[m];
  return tau;
}

// Kronecker symbol (a|b), completely multiplicative in b.
inline int kronecker_symbol(std::int64_t a, std::int64_t b) {
  static constexpr int kTab2[8] = {0, 1, 0, -1, 0, -1, 0, 1};
  if (b == 0) return (a == 1 || a == -1) ? 1 : 0;
  if ((a & 1) == 0 && (b & 1) == 0) return 0;
  int v = 0;
  while ((b & 1) == 0) {
    ++v;
    b /= 2;
  }
  int k = (v % 2 == 0) ? 1 : kTab2[a & 7];
  if (b < 0) {
    b = -b;
    if (a < 0) k = -k;
  }
  // b odd and positive from here on.
  for (;;) {
    if (a == 0) return b > 1 ? 0 : k;
    v = 0;
    while ((a & 1) == 0) {
      ++v;
      a /= 2;
    }
    if (v % 2 == 1) k *= kTab2[b & 7];
    if (a & b & 2) k = -k;
    std::int64_t r = a < 0 ? -a : a;
    a = b % r;
    b = r;
  }
}

// Λ_q(n) = q/φ(q) when gcd(n, q) = 1, else 0.
inline Rational local_von_mangoldt(std::int64_t n, std::uint64_t q) {
  if (q == 0) throw DomainError("local_von_mangoldt needs q >= 1");
  auto g = std::gcd(static_cast<std::uint64_t>(n < 0 ? -n : n), q);
  if (g != 1) return Rational(0);
  return Rational(BigInt(q), BigInt(euler_phi(q)));
}

}  // namespace qfp
