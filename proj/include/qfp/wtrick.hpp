#pragma once

// W-trick moduli, the exceptional set X0 and the tricked functions
// Λ'_{b,W̄} and r'_{f,b}.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/errors.hpp"
#include "qfp/qform.hpp"
#include "qfp/roles.hpp"

namespace qfp {

struct TrickParams {
  double N = 1e6;
  unsigned w = 2;
  double C1 = 20;
  unsigned gamma_exp = 3;  // γ = 2^{-gamma_exp}
  // When set, replace log^{C1+1} N and log log N in the ι and η sandwiches.
  std::optional<double> iota_threshold;
  std::optional<double> eta_threshold;

  double gamma() const { return std::ldexp(1.0, -static_cast<int>(gamma_exp)); }
  double log_N() const { return std::log(N); }
  double loglog_N() const { return std::log(std::log(N)); }

  void validate() const {
    if (gamma_exp < 2) throw ConfigError("gamma must be 2^-k with k >= 2");
    if (w < 2) throw ConfigError("w must be >= 2");
    if (!(N > std::exp(1.0))) throw ConfigError("N must exceed e so that log log N is defined");
    if (!(C1 > 0)) throw ConfigError("C1 must be positive");
  }

  double iota_threshold_value() const { return iota_threshold ? *iota_threshold : std::pow(log_N(), C1 + 1); }
  double eta_threshold_value() const { return eta_threshold ? *eta_threshold : loglog_N(); }
};

// Smallest e with p^e >= threshold, clamped to e >= 1.
inline unsigned exponent_for_threshold(std::uint64_t p, double threshold) {
  if (p < 2) throw DomainError("exponent_for_threshold needs a prime");
  unsigned e = 0;
  long double pe = 1;
  while (pe < static_cast<long double>(threshold)) {
    pe *= static_cast<long double>(p);
    ++e;
  }
  return std::max(e, 1u);
}

inline unsigned iota(std::uint64_t p, const TrickParams& params) {
  return exponent_for_threshold(p, params.iota_threshold_value());
}

inline unsigned eta(std::uint64_t p, const TrickParams& params) {
  return exponent_for_threshold(p, params.eta_threshold_value());
}

struct TrickModuli {
  std::uint64_t W = 1;
  std::uint64_t Wbar = 1;
  std::uint64_t Wtilde = 1;
  std::map<std::uint64_t, unsigned> iota;
  std::map<std::uint64_t, unsigned> eta;

  // φ(W)/W = φ(W̄)/W̄.
  double phi_ratio() const {
    double r = 1;
    for (const auto& [p, e] : iota) r *= 1.0 - 1.0 / static_cast<double>(p);
    return r;
  }
  Rational phi_ratio_exact() const {
    Rational r = 1;
    for (const auto& [p, e] : iota) r *= make_rational(static_cast<std::int64_t>(p) - 1, static_cast<std::int64_t>(p));
    return r;
  }
};

inline TrickModuli trick_moduli(const TrickParams& params) {
  params.validate();
  TrickModuli m;
  for (auto p : sieve_primes(params.w)) {
    unsigned i = iota(p, params), h = eta(p, params);
    if (!(i >= h && h >= 1))
      throw ConfigError("need iota(p) >= eta(p) >= 1, got iota(" + std::to_string(p) + ") = " + std::to_string(i) +
                        ", eta = " + std::to_string(h));
    m.iota[p] = i;
    m.eta[p] = h;
    auto pi = checked_pow(p, i), ph = checked_pow(p, h);
    if (!pi || !ph || *pi > std::numeric_limits<std::uint64_t>::max() / m.Wbar)
      throw ConfigError("Wbar overflows 64 bits at p = " + std::to_string(p) + " (iota = " + std::to_string(i) + ")");
    m.W *= p;
    m.Wbar *= *pi;
    m.Wtilde *= *ph;
  }
  double bound = std::pow(params.N, params.gamma()) - 1;
  if (!(static_cast<double>(m.Wbar) < bound))
    throw ConfigError("Wbar = " + std::to_string(m.Wbar) + " violates Wbar < N^gamma - 1 = " + std::to_string(bound));
  return m;
}

// ---------------------------------------------------------------------------
// Exceptional set X0

struct X0Clauses {
  bool zero = false;
  bool rough = false;
  bool smooth = false;
  bool square = false;
  bool any() const { return zero || rough || smooth || square; }
};

inline X0Clauses x0_clauses(const FactoredInteger& f, const TrickParams& params) {
  X0Clauses c;
  const double logN = params.log_N(), ll = params.loglog_N();
  if (!(ll > 0)) throw ConfigError("x0 needs log log N > 0");
  const double rough_log = params.C1 * std::log(logN);        // log of log^{C1} N
  const double smooth_prime_log = logN / (ll * ll * ll);      // log of N^{(1/loglogN)^3}
  const double smooth_target = params.gamma() * logN / ll;    // log of N^{γ/loglogN}
  const double square_target = params.gamma() * logN;         // log of N^γ
  double smooth_part = 0, square_root = 0;
  for (const auto& pp : f.factors) {
    double lp = std::log(static_cast<double>(pp.p));
    if (pp.e >= 2 && pp.e * lp > rough_log) c.rough = true;
    if (lp <= smooth_prime_log) smooth_part += pp.e * lp;
    square_root += (pp.e / 2) * lp;
  }
  c.smooth = smooth_part >= smooth_target;
  c.square = square_root > square_target;
  return c;
}

inline bool x0_contains(std::uint64_t n, const TrickParams& params, const SieveTable* sieve = nullptr) {
  if (static_cast<double>(n) > params.N) throw DomainError("x0_contains needs n <= N");
  if (n == 0) return true;
  FactoredInteger f = sieve ? sieve->factorize(n) : factorize_trial(n);
  return x0_clauses(f, params).any();
}

// Mask over [0, limit] from a smallest-prime-factor table.
inline std::vector<std::uint8_t> x0_mask(const SieveTable& sieve, std::uint64_t limit, const TrickParams& params) {
  std::vector<std::uint8_t> mask(limit + 1, 0);
  mask[0] = 1;
  for (std::uint64_t n = 1; n <= limit; ++n) mask[n] = x0_clauses(sieve.factorize(n), params).any();
  return mask;
}

// ---------------------------------------------------------------------------
// Tricked functions

// Λ'(n) = log n for primes n > N^{2γ}, else 0.
inline double lambda_prime(std::uint64_t n, const TrickParams& params, const SieveTable* sieve = nullptr) {
  if (n < 2) return 0;
  if (!(static_cast<double>(n) > std::pow(params.N, 2 * params.gamma()))) return 0;
  bool prime = sieve ? sieve->is_prime(n) : factorize_trial(n).is_prime();
  return prime ? std::log(static_cast<double>(n)) : 0.0;
}

// (φ(W)/W) Λ'(W̄n + b).
inline double tricked_von_mangoldt(std::uint64_t n, std::uint64_t b, const TrickModuli& m, const TrickParams& params,
                                   const SieveTable* sieve = nullptr) {
  if (b >= m.Wbar) throw DomainError("b must lie in [0, Wbar)");
  return m.phi_ratio() * lambda_prime(m.Wbar * n + b, params, sieve);
}

// r'_{f,b}(m) = (√-D / 2π)(W̄ / ρ_{f,b}(W̄)) R̄_f(W̄m + b), with R̄_f zero on X0
// and the whole function zero when ρ_{f,b}(W̄) = 0.
class TrickedRep {
 public:
  TrickedRep(const PDBQF& f, std::uint64_t b, const TrickModuli& m, const TrickParams& params)
      : f_(f), b_(b), m_(m), params_(params) {
    if (b >= m.Wbar) throw DomainError("b must lie in [0, Wbar)");
    rho_ = residue_rep_count(f, static_cast<std::int64_t>(b), m.Wbar);
    if (rho_ > 0)
      scale_ = std::sqrt(static_cast<double>(-f.discriminant())) / (2 * std::numbers::pi) *
               static_cast<double>(m.Wbar) / static_cast<double>(rho_);
  }

  std::uint64_t rho() const { return rho_; }
  double scale() const { return scale_; }

  double operator()(std::uint64_t mm, const RepTable* reps = nullptr, const SieveTable* sieve = nullptr) const {
    if (rho_ == 0) return 0;
    std::uint64_t n = m_.Wbar * mm + b_;
    if (x0_contains(n, params_, sieve)) return 0;
    double R = reps && n <= reps->limit ? (*reps)[static_cast<std::int64_t>(n)]
                                        : static_cast<double>(representation_count(f_, static_cast<std::int64_t>(n)));
    return scale_ * R;
  }

 private:
  PDBQF f_;
  std::uint64_t b_;
  TrickModuli m_;
  TrickParams params_;
  std::uint64_t rho_ = 0;
  double scale_ = 0;
};

inline double tricked_rep(std::uint64_t mm, const PDBQF& f, std::uint64_t b, const TrickModuli& m,
                          const TrickParams& params) {
  return TrickedRep(f, b, m, params)(mm);
}

// Membership in B_{t,s}: von Mangoldt slots need (b, W) = 1; form slots need
// b ≢ 0 mod p^ι(p) for all p <= w and ρ_{f,b}(W̄) > 0.
inline bool residue_set_contains(const std::vector<std::uint64_t>& values, const std::vector<Role>& roles,
                                 const TrickModuli& m) {
  if (values.size() != roles.size()) throw ConfigError("residue tuple and role list differ in length");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t b = values[i];
    switch (roles[i].kind) {
      case Role::Kind::VonMangoldt:
        if (std::gcd(b, m.W) != 1) return false;
        break;
      case Role::Kind::QForm:
        for (const auto& [p, e] : m.iota)
          if (b % ipow(p, e) == 0) return false;
        if (residue_rep_count(roles[i].form, static_cast<std::int64_t>(b), m.Wbar) == 0) return false;
        break;
      case Role::Kind::Divisor:
        throw ConfigError("divisor slots have no residue condition");
    }
  }
  return true;
}

}  // namespace qfp
