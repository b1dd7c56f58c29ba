#pragma once

// Pseudorandom majorants: the Goldston-Yıldırım weight Λ_{χ,R}, the
// Green-Tao majorant ν_GT,b, Matthiesen's ν_Matt,b,D for representation
// functions, their average ν*, and empirical audits.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/convex.hpp"
#include "qfp/errors.hpp"
#include "qfp/linsys.hpp"
#include "qfp/parallel.hpp"
#include "qfp/qform.hpp"
#include "qfp/wtrick.hpp"

namespace qfp {

// χ(x) = cos²(πx/2) on [-1, 1]. It is C¹, even, χ(0) = 1, and
// c_χ = ∫_0^1 χ'(x)² dx = π²/8 is divided out wherever the normalisation
// ∫χ'² = 1 is assumed.
class SmoothCutoff {
 public:
  SmoothCutoff() {
    auto sq = [this](double x) {
      double v = derivative(x);
      return v * v;
    };
    c_ = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(sq, 0.0, 1.0, 10, 1e-14);
  }

  double operator()(double x) const {
    if (x <= -1 || x >= 1) return 0;
    double c = std::cos(std::numbers::pi * x / 2);
    return c * c;
  }
  double derivative(double x) const {
    if (x <= -1 || x >= 1) return 0;
    return -std::numbers::pi / 2 * std::sin(std::numbers::pi * x);
  }
  double normalization() const { return c_; }

 private:
  double c_ = 0;
};

inline const SmoothCutoff& default_cutoff() {
  static const SmoothCutoff chi;
  return chi;
}

struct MajorantParams {
  TrickParams trick;
  TrickModuli moduli;
  double gamma = 0;
  double xi = 0;
  double R = 0;
  double log_R = 0;
  std::uint64_t N_prime = 0;  // floor(N / W̄)

  explicit MajorantParams(const TrickParams& t) : trick(t), moduli(trick_moduli(t)) {
    gamma = t.gamma();
    if (!(gamma > 0 && gamma < 0.5)) throw ConfigError("gamma must lie in (0, 1/2)");
    xi = gamma / 2;
    log_R = gamma * t.log_N();
    R = std::exp(log_R);
    if (R < 2) throw ConfigError("R = N^gamma must be >= 2");
    // saturates for astronomically large N; only prefixes are ever scanned
    double np = std::floor(t.N / static_cast<double>(moduli.Wbar));
    N_prime = np < 9.0e18 ? static_cast<std::uint64_t>(np) : std::uint64_t{9'000'000'000'000'000'000u};
  }

  // 2/ξ = 2^{gamma_exp + 2}
  unsigned two_over_xi() const { return 1u << (trick.gamma_exp + 2); }
};

namespace detail {

inline FactoredInteger factor_with(std::uint64_t n, const SieveTable* sieve) {
  return sieve && n <= sieve->limit() ? sieve->factorize(n) : factorize_trial(n);
}

// Σ over squarefree ℓ | n built from `primes` with ℓ < R of μ(ℓ) χ(log ℓ / log R).
inline double mobius_chi_sum(const std::vector<std::uint64_t>& primes, double log_R, const SmoothCutoff& chi) {
  double total = 0;
  std::function<void(std::size_t, double, int)> rec = [&](std::size_t i, double log_l, int mu) {
    if (i == primes.size()) {
      total += mu * chi(log_l / log_R);
      return;
    }
    rec(i + 1, log_l, mu);
    double next = log_l + std::log(static_cast<double>(primes[i]));
    if (next < log_R) rec(i + 1, next, -mu);  // χ vanishes from ℓ = R on
  };
  rec(0, 0.0, 1);
  return total;
}

}  // namespace detail

// (log R / c_χ) (Σ_{ℓ | n} μ(ℓ) χ(log ℓ / log R))².
inline double lambda_chi_R(std::uint64_t n, const MajorantParams& params, const SieveTable* sieve = nullptr) {
  if (n == 0) throw DomainError("lambda_chi_R needs n >= 1");
  const auto& chi = default_cutoff();
  std::vector<std::uint64_t> primes;
  for (const auto& pp : detail::factor_with(n, sieve).factors) primes.push_back(pp.p);
  double s = detail::mobius_chi_sum(primes, params.log_R, chi);
  return params.log_R / chi.normalization() * s * s;
}

// ν_GT,b(n) = (φ(W)/W) Λ_{χ,R}(W̄n + b).
inline double nu_gt(std::uint64_t n, std::uint64_t b, const MajorantParams& params, const SieveTable* sieve = nullptr) {
  if (b >= params.moduli.Wbar) throw DomainError("b must lie in [0, Wbar)");
  if (std::gcd(b, params.moduli.W) != 1) throw DomainError("nu_gt needs gcd(b, W) = 1, b = " + std::to_string(b));
  if (n > params.N_prime) throw DomainError("nu_gt needs n <= N' = " + std::to_string(params.N_prime));
  return params.moduli.phi_ratio() * lambda_chi_R(params.moduli.Wbar * n + b, params, sieve);
}

// ---------------------------------------------------------------------------
// Matthiesen's majorant

// Principal form of discriminant D < 0, D ≡ 0, 1 mod 4.
inline PDBQF principal_form(std::int64_t D) {
  if (D >= 0 || (floor_mod(D, 4) != 0 && floor_mod(D, 4) != 1))
    throw DomainError("discriminant must be negative and 0 or 1 mod 4, got " + std::to_string(D));
  return floor_mod(D, 4) == 0 ? PDBQF(1, 0, -D / 4) : PDBQF(1, 1, (1 - D) / 4);
}

// P_D: primes p ∤ D with χ_D(p) = 1. Q_D: primes p ∤ D with χ_D(p) = -1.
inline bool in_P(std::int64_t D, std::uint64_t p) { return kronecker_symbol(D, static_cast<std::int64_t>(p)) == 1; }
inline bool in_Q(std::int64_t D, std::uint64_t p) { return kronecker_symbol(D, static_cast<std::int64_t>(p)) == -1; }

// Products of m0 distinct primes from [N^{2^{-i-1}}, N^{2^{-i}}] (or {1} in
// the base case). Only used for inspection; ν' counts them by binomials.
inline std::vector<std::uint64_t> u_sets(int i, unsigned s, const MajorantParams& params,
                                         std::uint64_t max_elements = 1'000'000) {
  const unsigned base_s = params.two_over_xi();
  const int base_i = static_cast<int>(params.trick.gamma_exp + 2) - 2;  // log2(2/ξ) - 2
  if (s < base_s) throw DomainError("u_sets needs s >= 2/xi = " + std::to_string(base_s));
  if (s == base_s) return i == base_i ? std::vector<std::uint64_t>{1} : std::vector<std::uint64_t>{};
  const double logN = params.trick.log_N();
  double lo = std::exp(logN * std::ldexp(1.0, -i - 1)), hi = std::exp(logN * std::ldexp(1.0, -i));
  double ls = std::log2(static_cast<double>(s));
  auto m0 = static_cast<long>(std::ceil(params.xi * s * (i + 3 - ls) / 100));
  if (m0 < 1) return {};
  if (hi > 1e12) throw BudgetError("prime interval for U(i, s) is too large to list");
  std::vector<std::uint64_t> ps;
  for (auto p : sieve_primes(static_cast<std::uint64_t>(std::floor(hi))))
    if (static_cast<double>(p) >= lo) ps.push_back(p);
  std::vector<std::uint64_t> out;
  if (static_cast<long>(ps.size()) < m0) return out;
  std::function<void(std::size_t, long, std::uint64_t)> rec = [&](std::size_t from, long left, std::uint64_t prod) {
    if (left == 0) {
      if (out.size() >= max_elements) throw BudgetError("U(i, s) has more than " + std::to_string(max_elements) + " elements");
      out.push_back(prod);
      return;
    }
    for (std::size_t j = from; j + left <= ps.size(); ++j) {
      if (prod > std::numeric_limits<std::uint64_t>::max() / ps[j]) throw BudgetError("U(i, s) element overflows");
      rec(j + 1, left - 1, prod * ps[j]);
    }
  };
  rec(0, m0, 1);
  return out;
}

// The three constituent sums at a single integer, before normalisation.
struct MattTerms {
  double tau_prime = 0;
  double beta_prime = 0;
  double nu_prime = 0;
};

class MattMajorant {
 public:
  MattMajorant(const PDBQF& f, std::uint64_t b, const MajorantParams& params) : f_(f), b_(b), params_(params) {
    D_ = f.discriminant();
    const auto& m = params.moduli;
    if (b >= m.Wbar) throw DomainError("b must lie in [0, Wbar)");
    for (const auto& [p, e] : m.iota)
      if (b % ipow(p, e) == 0)
        throw DomainError("b = " + std::to_string(b) + " is divisible by " + std::to_string(p) + "^" + std::to_string(e));
    if (residue_rep_count(f, static_cast<std::int64_t>(b), m.Wbar) == 0)
      throw DomainError("rho_{f,b}(Wbar) = 0 for b = " + std::to_string(b));
  }
  MattMajorant(std::int64_t D, std::uint64_t b, const MajorantParams& params)
      : MattMajorant(principal_form(D), b, params) {}

  std::int64_t discriminant() const { return D_; }
  std::uint64_t b() const { return b_; }
  const MajorantParams& params() const { return params_; }
  std::optional<double> constant() const { return C_; }
  std::uint64_t calibration_sample() const { return sample_; }

  MattTerms terms_at(std::uint64_t x, const SieveTable* sieve = nullptr) const {
    const auto& chi = default_cutoff();
    const double log_R = params_.log_R;
    const auto w = static_cast<std::uint64_t>(params_.trick.w);
    MattTerms t;
    auto fac = detail::factor_with(x, sieve);
    std::vector<PrimePower> P, Q;
    for (const auto& pp : fac.factors) {
      if (pp.p <= w) continue;
      if (in_P(D_, pp.p)) P.push_back(pp);
      else if (in_Q(D_, pp.p)) Q.push_back(pp);
    }
    // τ': d | x, d ∈ <P_D>, primes > w, d < R by the support of χ.
    std::function<void(std::size_t, double)> rec_d = [&](std::size_t i, double log_d) {
      if (i == P.size()) {
        t.tau_prime += chi(log_d / log_R);
        return;
      }
      double l = log_d, lp = std::log(static_cast<double>(P[i].p));
      for (unsigned e = 0; e <= P[i].e && l < log_R; ++e, l += lp) rec_d(i + 1, l);
    };
    rec_d(0, 0.0);

    // β': m ∈ <Q_D>, m < R, m² | x; inner sum over squarefree e | x/m².
    std::vector<unsigned> half(Q.size());
    std::function<void(std::size_t, double)> rec_m = [&](std::size_t i, double log_m) {
      if (i == Q.size()) {
        std::vector<std::uint64_t> rest;
        for (std::size_t j = 0; j < Q.size(); ++j)
          if (Q[j].e > 2 * half[j]) rest.push_back(Q[j].p);
        double inner = detail::mobius_chi_sum(rest, log_R, chi);
        t.beta_prime += inner * inner;
        return;
      }
      double l = log_m, lq = std::log(static_cast<double>(Q[i].p));
      for (unsigned e = 0; 2 * e <= Q[i].e && l < log_R; ++e, l += lq) {
        half[i] = e;
        rec_m(i + 1, l);
      }
      half[i] = 0;
    };
    rec_m(0, 0.0);

    t.nu_prime = nu_prime_weight(fac) * t.tau_prime;
    return t;
  }

  // Σ_s Σ_i Σ_{u ∈ U(i,s)} 2^s 1_{u | x}: the base case contributes 2^{2/ξ};
  // for s > 2/ξ, #{u ∈ U(i,s) : u | x} = C(k, m0) with k the number of
  // distinct prime factors of x in [N^{2^{-i-1}}, N^{2^{-i}}].
  double nu_prime_weight(const FactoredInteger& fac) const {
    const unsigned base_s = params_.two_over_xi();
    const double logN = params_.trick.log_N(), ll = params_.trick.loglog_N();
    double weight = std::ldexp(1.0, static_cast<int>(base_s));
    const auto s_max = std::max<long>(base_s, static_cast<long>(std::floor(ll * ll * ll)));
    const double lll = ll > 1 ? std::log(ll) : 0;
    const auto i_max = static_cast<long>(std::floor(6 * lll));
    for (long s = base_s + 1; s <= s_max; ++s) {
      double ls = std::log2(static_cast<double>(s));
      for (auto i = static_cast<long>(std::ceil(ls - 2)); i <= i_max; ++i) {
        auto m0 = static_cast<long>(std::ceil(params_.xi * static_cast<double>(s) * (i + 3 - ls) / 100));
        if (m0 < 1) continue;
        double lo = logN * std::ldexp(1.0, static_cast<int>(-i - 1)), hi = logN * std::ldexp(1.0, static_cast<int>(-i));
        long k = 0;
        for (const auto& pp : fac.factors) {
          double lp = std::log(static_cast<double>(pp.p));
          k += lp >= lo && lp <= hi;
        }
        if (k >= m0)
          weight += std::ldexp(boost::math::binomial_coefficient<double>(static_cast<unsigned>(k), static_cast<unsigned>(m0)),
                               static_cast<int>(s));
      }
    }
    return weight;
  }

  // Sets C_{D,γ} so that the mean of β'ν' over W̄n + b, n in [1, sample_limit], is 1.
  double calibrate(std::uint64_t sample_limit, const SieveTable* sieve = nullptr, unsigned jobs = 1) {
    if (sample_limit == 0 || sample_limit > params_.N_prime)
      throw DomainError("calibration sample must lie in [1, N'] with N' = " + std::to_string(params_.N_prime));
    std::vector<double> vals(sample_limit);
    parallel_for(sample_limit, jobs, [&](std::size_t i) {
      auto t = terms_at(params_.moduli.Wbar * (i + 1) + b_, sieve);
      vals[i] = t.beta_prime * t.nu_prime;
    });
    NeumaierSum s;
    for (double v : vals) s += v;
    C_ = s.value() / static_cast<double>(sample_limit);
    if (!(*C_ > 0)) throw DomainError("calibration produced a non-positive constant");
    sample_ = sample_limit;
    return *C_;
  }

  // ν_Matt,b,D(n) = r_{D,γ}(W̄n + b) = β'ν' / C_{D,γ}.
  double operator()(std::uint64_t n, const SieveTable* sieve = nullptr) const {
    if (!C_) throw StateError("nu_matt used before calibrate()");
    auto t = terms_at(params_.moduli.Wbar * n + b_, sieve);
    return t.beta_prime * t.nu_prime / *C_;
  }

 private:
  PDBQF f_;
  std::int64_t D_ = 0;
  std::uint64_t b_ = 0;
  MajorantParams params_;
  std::optional<double> C_;
  std::uint64_t sample_ = 0;
};

// ν*(n) = (1 + Σ ν_GT,b_i + Σ ν_Matt,b_j,D_j + ν_Matt,b_0,D_0) / (t + s + 2),
// with ν* = 1 outside [1, N']. `matt` lists the form slots first and the
// extra (b_0, D_0) majorant last.
class NuStar {
 public:
  NuStar(const MajorantParams& params, std::vector<std::uint64_t> gt_residues, std::vector<MattMajorant> matt)
      : params_(params), gt_(std::move(gt_residues)), matt_(std::move(matt)) {
    if (matt_.empty()) throw ConfigError("nu_star needs at least the (b0, D0) majorant");
    for (auto b : gt_)
      if (std::gcd(b, params.moduli.W) != 1) throw DomainError("nu_star: GT residue " + std::to_string(b) + " is not coprime to W");
  }

  std::size_t slots() const { return gt_.size() + matt_.size() + 1; }

  double operator()(std::int64_t n, const SieveTable* sieve = nullptr) const {
    if (n < 1 || static_cast<std::uint64_t>(n) > params_.N_prime) return 1;
    auto u = static_cast<std::uint64_t>(n);
    double s = 1;
    for (auto b : gt_) s += nu_gt(u, b, params_, sieve);
    for (const auto& m : matt_) s += m(u, sieve);
    return s / static_cast<double>(slots());
  }

 private:
  MajorantParams params_;
  std::vector<std::uint64_t> gt_;
  std::vector<MattMajorant> matt_;
};

struct LinearFormsAudit {
  double linear_forms = 0;  // E_{n ∈ K} ∏ ν(ψ_i(n) mod M)
  double mean = 0;          // E_{n ≤ M} ν(n)
  std::uint64_t points = 0;
};

// Empirical linear-forms average over the body, values reduced into [1, M].
inline LinearFormsAudit linear_forms_audit(const std::function<double(std::int64_t)>& nu, const AffineSystem& sys,
                                           const ConvexBody& body, std::uint64_t M, unsigned jobs = 1) {
  if (!finite_complexity(sys)) throw DomainError("linear forms audit needs a finite-complexity system");
  if (body.dimension() != sys.d) throw ConfigError("body and system dimensions differ");
  if (!factorize_trial(M).is_prime()) throw DomainError("M must be prime");
  const auto Mi = static_cast<std::int64_t>(M);
  auto reduce = [&](std::int64_t v) {
    std::int64_t r = floor_mod(v, Mi);
    return r == 0 ? Mi : r;
  };
  LinearFormsAudit out;
  const std::int64_t lo = body.lo()[0], hi = body.hi()[0];
  const auto slabs = static_cast<std::size_t>(hi - lo + 1);
  std::vector<NeumaierSum> part(slabs);
  std::vector<std::uint64_t> cnt(slabs, 0);
  parallel_for(slabs, jobs, [&](std::size_t k) {
    auto x0 = lo + static_cast<std::int64_t>(k);
    body.for_each_row(
        [&](std::vector<std::int64_t>& x, std::int64_t l, std::int64_t h) {
          for (std::int64_t v = l; v <= h; ++v) {
            x[sys.d - 1] = v;
            double prod = 1;
            for (const auto& f : sys.forms) prod *= nu(reduce(f(x)));
            part[k] += prod;
            ++cnt[k];
          }
        },
        x0, x0);
  });
  NeumaierSum total;
  for (std::size_t k = 0; k < slabs; ++k) {
    total += part[k].value();
    out.points += cnt[k];
  }
  out.linear_forms = out.points ? total.value() / static_cast<double>(out.points) : 0;
  std::vector<double> means(M);
  parallel_for(M, jobs, [&](std::size_t i) { means[i] = nu(static_cast<std::int64_t>(i + 1)); });
  NeumaierSum m;
  for (double v : means) m += v;
  out.mean = m.value() / static_cast<double>(M);
  return out;
}

}  // namespace qfp
