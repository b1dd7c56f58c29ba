#pragma once

// Local factors β_p of a correlation pattern, the truncated singular
// product and the archimedean factor β_∞.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/convex.hpp"
#include "qfp/errors.hpp"
#include "qfp/linsys.hpp"
#include "qfp/parallel.hpp"
#include "qfp/qform.hpp"
#include "qfp/roles.hpp"

namespace qfp {

struct CorrelationSpec {
  AffineSystem system;
  std::vector<Role> roles;
  ConvexBody body;
  std::int64_t N = 0;
  bool finite = true;

  CorrelationSpec() = default;
  // Systems such as (n, n+2) have proportional linear parts; they are only
  // accepted when the caller asks for it, and `finite` records the fact.
  CorrelationSpec(AffineSystem sys, std::vector<Role> r, ConvexBody k, std::int64_t n,
                  bool allow_infinite_complexity = false)
      : system(std::move(sys)), roles(std::move(r)), body(std::move(k)), N(n) {
    if (roles.size() != system.size())
      throw ConfigError("system has " + std::to_string(system.size()) + " forms but " + std::to_string(roles.size()) +
                        " roles");
    if (body.dimension() != system.d)
      throw ConfigError("body dimension " + std::to_string(body.dimension()) + " differs from system dimension " +
                        std::to_string(system.d));
    if (N < 1) throw ConfigError("N must be positive");
    finite = finite_complexity(system);
    if (!finite && !allow_infinite_complexity) throw ConfigError("system does not have finite complexity");
    for (const auto& v : body.vertices())
      for (std::size_t i = 0; i < system.size(); ++i) {
        Rational y = system[i].constant;
        for (int c = 0; c < system.d; ++c) y += Rational(system[i].linear[c]) * v[c];
        if (y < 0 || y > N)
          throw ConfigError("form " + std::to_string(i) + " takes value " + to_string(y) +
                            " at a vertex of the body, outside [0, N]");
      }
  }

  std::size_t t() const { return count(Role::Kind::VonMangoldt); }
  std::size_t s() const { return count(Role::Kind::QForm); }
  std::size_t count(Role::Kind k) const {
    std::size_t n = 0;
    for (const auto& r : roles) n += r.kind == k;
    return n;
  }
};

// a, a+d, ..., a+(k-1)d prime-weighted, d weighted by R_{x^2+y^2}.
inline CorrelationSpec ap_spec(int k, std::int64_t N) {
  std::vector<Role> roles(k, Role::von_mangoldt());
  roles.push_back(Role::qform(PDBQF(1, 0, 1)));
  return CorrelationSpec(ap_system(k), std::move(roles), ap_body(k, N), N);
}

struct LocalFactorReport {
  std::uint64_t p = 0;
  Rational value;
  unsigned depth = 0;
  bool stabilized = false;
  double error_bound = 0;  // fitted constant, see beta_p_stabilized
};

enum class BetaPath { automatic, grid, grouped };

inline constexpr std::uint64_t kBetaGridBudget = 10'000'000;         // p^{md} grid points
inline constexpr std::uint64_t kResidueTableBudget = 100'000'000;    // p^{2m} pairs per table

namespace detail {

// ρ_{f,β}(p^m) as a function of β mod p^m. For p ∤ 2D it only depends on
// min(v_p(β), m); otherwise a full table by residue is built.
struct LocalRho {
  std::uint64_t p = 0, Q = 1;
  unsigned m = 0;
  std::vector<std::uint64_t> table;
  std::vector<Rational> density;        // ρ/p^m by capped valuation
  std::vector<std::uint64_t> by_val;    // ρ by capped valuation, when Q is small

  LocalRho(const PDBQF& f, std::uint64_t p_, unsigned m_) : p(p_), m(m_) {
    Q = ipow(p, m);
    std::int64_t D = f.discriminant();
    if (p == 2 || D % static_cast<std::int64_t>(p) == 0) {
      auto Q2 = checked_pow(p, 2 * m);
      if (!Q2 || *Q2 > kResidueTableBudget)
        throw BudgetError("residue table mod " + std::to_string(p) + "^" + std::to_string(m) +
                          " is too large; try a smaller depth");
      table = residue_rep_table(f, Q);
      return;
    }
    density.resize(m + 1);
    Rational rest{BigInt(Q)};
    for (unsigned v = 0; v < m; ++v) {
      density[v] = residue_density_closed_form(f, static_cast<std::int64_t>(ipow(p, v)), p, m);
      // #{β mod p^m : v_p(β) = v} = p^{m-v-1}(p-1)
      rest -= density[v] * Rational(BigInt(ipow(p, m - v - 1) * (p - 1)));
    }
    density[m] = rest;
    if (Q <= kBetaGridBudget)
      for (const auto& r : density)
        by_val.push_back(boost::multiprecision::numerator(r * Rational(BigInt(Q))).convert_to<std::uint64_t>());
  }

  bool valuation_only() const { return table.empty(); }

  std::uint64_t count(std::uint64_t r) const {
    if (!table.empty()) return table[r];
    unsigned v = r == 0 ? m : std::min(valuation(static_cast<std::int64_t>(r), p), m);
    return by_val[v];
  }
};

inline Rational lambda_p_factor(std::uint64_t p, std::size_t t) {
  Rational f = make_rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(p) - 1);
  Rational out = 1;
  for (std::size_t i = 0; i < t; ++i) out *= f;
  return out;
}

inline void check_roles(const CorrelationSpec& spec) {
  for (const auto& r : spec.roles)
    if (r.kind == Role::Kind::Divisor) throw DomainError("local factors are not defined for divisor slots");
}

// Full iteration over (Z/p^m)^d.
inline Rational beta_p_grid(const CorrelationSpec& spec, std::uint64_t p, unsigned m) {
  const int d = spec.system.d;
  const std::uint64_t Q = ipow(p, m);
  auto pts = checked_pow(Q, static_cast<unsigned>(d));
  if (!pts || *pts > kBetaGridBudget)
    throw BudgetError("beta_p grid at p=" + std::to_string(p) + ", m=" + std::to_string(m) + " has more than " +
                      std::to_string(kBetaGridBudget) + " points; use a smaller m and check stabilization");
  const auto q = static_cast<std::int64_t>(Q);
  std::vector<std::size_t> vm, qf;
  std::vector<LocalRho> rho;
  for (std::size_t i = 0; i < spec.roles.size(); ++i) {
    if (spec.roles[i].kind == Role::Kind::VonMangoldt) {
      vm.push_back(i);
    } else {
      qf.push_back(i);
      rho.emplace_back(spec.roles[i].form, p, m);
    }
  }
  const std::size_t t = spec.system.size();
  std::vector<std::vector<std::int64_t>> step(d, std::vector<std::int64_t>(t));
  std::vector<std::int64_t> val(t);
  for (std::size_t i = 0; i < t; ++i) {
    val[i] = floor_mod(spec.system[i].constant, q);
    for (int c = 0; c < d; ++c) step[c][i] = floor_mod(spec.system[i].linear[c], q);
  }
  const auto P = static_cast<std::int64_t>(p);
  std::vector<std::int64_t> a(d, 0);
  BigInt big = 0;
  unsigned __int128 acc = 0;
  const bool wide = qf.size() > 2;
  for (;;) {
    bool coprime = true;
    for (auto i : vm)
      if (val[i] % P == 0) {
        coprime = false;
        break;
      }
    if (coprime) {
      if (wide) {
        BigInt prod = 1;
        for (std::size_t j = 0; j < qf.size(); ++j) prod *= rho[j].count(static_cast<std::uint64_t>(val[qf[j]]));
        big += prod;
      } else {
        unsigned __int128 prod = 1;
        for (std::size_t j = 0; j < qf.size(); ++j) prod *= rho[j].count(static_cast<std::uint64_t>(val[qf[j]]));
        acc += prod;
      }
    }
    // Bumping a coordinate by one (including the wrap to 0) adds its column.
    int c = 0;
    for (; c < d; ++c) {
      for (std::size_t i = 0; i < t; ++i) {
        val[i] += step[c][i];
        if (val[i] >= q) val[i] -= q;
      }
      if (++a[c] < q) break;
      a[c] = 0;
    }
    if (c == d) break;
  }
  BigInt total = big;
  {
    // cpp_int has no direct unsigned __int128 constructor
    BigInt hi = static_cast<std::uint64_t>(acc >> 64), lo = static_cast<std::uint64_t>(acc);
    total += (hi << 64) + lo;
  }
  BigInt den = boost::multiprecision::pow(BigInt(Q), static_cast<unsigned>(d) + static_cast<unsigned>(qf.size()));
  return lambda_p_factor(p, vm.size()) * Rational(total, den);
}

// Grouping by valuations: P_m(a) depends only on which von Mangoldt values
// are divisible by p and on min(v_p(ψ_j(a)), m) for the form slots, and the
// probability of each valuation pattern comes from local divisor densities
// by inclusion-exclusion.
inline Rational beta_p_grouped(const CorrelationSpec& spec, std::uint64_t p, unsigned m) {
  std::vector<std::size_t> vm, qf;
  std::vector<LocalRho> rho;
  for (std::size_t i = 0; i < spec.roles.size(); ++i) {
    if (spec.roles[i].kind == Role::Kind::VonMangoldt) {
      vm.push_back(i);
    } else {
      qf.push_back(i);
      rho.emplace_back(spec.roles[i].form, p, m);
      if (!rho.back().valuation_only())
        throw DomainError("grouped beta_p needs p not dividing 2D for every form slot (p=" + std::to_string(p) + ")");
    }
  }
  const std::size_t t = spec.system.size();
  if (t > 20) throw BudgetError("too many forms for inclusion-exclusion");
  std::map<std::vector<unsigned>, Rational> memo;
  auto alpha_at = [&](const std::vector<unsigned>& e) -> const Rational& {
    auto it = memo.find(e);
    if (it != memo.end()) return it->second;
    std::vector<std::uint64_t> mod(t);
    for (std::size_t i = 0; i < t; ++i) mod[i] = ipow(p, e[i]);
    return memo.emplace(e, alpha_hensel(DensityQuery(spec.system, mod))).first->second;
  };

  Rational total = 0;
  std::vector<unsigned> pattern(qf.size(), 0);
  for (;;) {
    Rational w = 1;
    for (std::size_t j = 0; j < qf.size() && w != 0; ++j) w *= rho[j].density[pattern[j]];
    if (w != 0) {
      std::vector<unsigned> base(t, 0);
      std::vector<std::size_t> open = vm;  // slots whose valuation is pinned exactly
      for (std::size_t j = 0; j < qf.size(); ++j) {
        base[qf[j]] = pattern[j];
        if (pattern[j] < m) open.push_back(qf[j]);
      }
      Rational prob = 0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << open.size()); ++mask) {
        auto e = base;
        int sign = 1;
        for (std::size_t b = 0; b < open.size(); ++b)
          if (mask >> b & 1) {
            ++e[open[b]];
            sign = -sign;
          }
        const Rational& a = alpha_at(e);
        if (sign > 0) prob += a;
        else prob -= a;
      }
      total += w * prob;
    }
    std::size_t j = 0;
    for (; j < qf.size(); ++j) {
      if (++pattern[j] <= m) break;
      pattern[j] = 0;
    }
    if (j == qf.size()) break;
  }
  return lambda_p_factor(p, vm.size()) * total;
}

inline bool grouped_applies(const CorrelationSpec& spec, std::uint64_t p) {
  for (const auto& r : spec.roles)
    if (r.kind == Role::Kind::QForm && (p == 2 || r.form.discriminant() % static_cast<std::int64_t>(p) == 0))
      return false;
  return true;
}

}  // namespace detail

// E_{a ∈ (Z/p^m)^d} ∏ Λ_p(ψ_i(a)) ∏ ρ_{f_j,ψ_j(a)}(p^m)/p^m, exactly.
inline Rational beta_p_truncated(const CorrelationSpec& spec, std::uint64_t p, unsigned m,
                                 BetaPath path = BetaPath::automatic) {
  detail::check_roles(spec);
  if (m == 0) throw DomainError("depth m must be >= 1");
  if (path == BetaPath::automatic) {
    auto pts = checked_pow(p, m * static_cast<unsigned>(spec.system.d));
    bool grid_ok = pts && *pts <= kBetaGridBudget;
    if (grid_ok && !detail::grouped_applies(spec, p)) {
      auto q2 = checked_pow(p, 2 * m);
      grid_ok = q2 && *q2 <= kResidueTableBudget;
    }
    path = grid_ok || !detail::grouped_applies(spec, p) ? BetaPath::grid : BetaPath::grouped;
  }
  return path == BetaPath::grid ? detail::beta_p_grid(spec, p, m) : detail::beta_p_grouped(spec, p, m);
}

// Depth from which the form slots are lift-invariant: max_j v_p(D_j).
inline unsigned stabilization_threshold(const CorrelationSpec& spec, std::uint64_t p) {
  unsigned M0 = 0;
  for (const auto& r : spec.roles)
    if (r.kind == Role::Kind::QForm) M0 = std::max(M0, valuation(r.form.discriminant(), p));
  return M0;
}

// Computes β_p(m) for m = max(M0, 1), M0+1, ... until two consecutive depths
// agree exactly. If max_m is reached (or the next depth is over budget) the
// report is unstabilized and error_bound = c m^s p^{-m/2}, with c fitted so
// that the bound equals the last observed step |β_p(m) - β_p(m-1)|.
inline LocalFactorReport beta_p_stabilized(const CorrelationSpec& spec, std::uint64_t p, unsigned max_m,
                                           BetaPath path = BetaPath::automatic) {
  detail::check_roles(spec);
  LocalFactorReport rep;
  rep.p = p;
  const std::size_t s = spec.s();
  if (s == 0) {
    // Λ_p only sees residues mod p, so β_p(m) = β_p(1).
    rep.value = beta_p_truncated(spec, p, 1, path);
    rep.depth = 1;
    rep.stabilized = true;
    return rep;
  }
  const unsigned M0 = stabilization_threshold(spec, p);
  if (max_m < M0 + 1)
    throw DomainError("max_m = " + std::to_string(max_m) + " is below the stabilization threshold + 1 = " +
                      std::to_string(M0 + 1));
  unsigned m = std::max(M0, 1u);
  Rational prev = beta_p_truncated(spec, p, m, path);
  rep.value = prev;
  rep.depth = m;
  while (m < max_m) {
    Rational cur;
    try {
      cur = beta_p_truncated(spec, p, m + 1, path);
    } catch (const BudgetError&) {
      break;
    }
    if (cur == prev) {
      rep.value = cur;
      rep.depth = m;
      rep.stabilized = true;
      return rep;
    }
    ++m;
    rep.value = cur;
    rep.depth = m;
    double step = std::abs(to_double(cur - prev));
    double c = step * std::pow(static_cast<double>(p), (m - 1) / 2.0) / std::pow(static_cast<double>(m - 1), s);
    rep.error_bound = c * std::pow(static_cast<double>(m), s) * std::pow(static_cast<double>(p), -(m / 2.0));
    prev = cur;
  }
  if (!rep.stabilized && rep.error_bound == 0) rep.error_bound = std::numeric_limits<double>::infinity();
  return rep;
}

// β_p for the progression system (a, a+d, ..., a+(k-1)d; d) with R_{x^2+y^2}
// on d, from the explicit piecewise formulas.
inline Rational beta_p_ap_closed_form(int k, std::uint64_t p) {
  if (k < 2) throw DomainError("closed form needs k >= 2");
  const auto P = static_cast<std::int64_t>(p);
  if (p == 2) return Rational(BigInt(1) << (k - 2));
  Rational lead = 1;
  for (int i = 0; i < k; ++i) lead *= make_rational(P, P - 1);
  const bool one_mod_4 = p % 4 == 1;
  if (static_cast<std::int64_t>(p) >= k) {
    Rational inner = Rational(1) - make_rational(k, P);
    if (one_mod_4)
      inner += make_rational(2 * (k - 1), P * P) - make_rational(k - 1, P * P * P);
    else
      inner += make_rational(k - 1, P * P * P);
    return lead * inner;
  }
  Rational tail = one_mod_4 ? make_rational((P - 1) * (2 * P - 1), P * P * P) : make_rational(P - 1, P * P * P);
  return lead * tail;
}

struct SingularProduct {
  Rational exact;  // ∏ of the reported factors
  double value = 0;
  double tail_halfwidth = 0;
  double fitted_c = 0;  // max p^2 |β_p - 1| over (p_max/2, p_max]
  std::uint64_t p_max = 0;
  std::vector<LocalFactorReport> factors;
  std::vector<std::uint64_t> unstabilized;
};

// ∏_{p <= p_max} β_p. The tail estimate extrapolates |β_p - 1| <= c/p^2 past
// p_max, which gives a relative half-width of about c/p_max.
inline SingularProduct singular_product(const CorrelationSpec& spec, std::uint64_t p_max, unsigned extra_depth = 3,
                                        unsigned jobs = 1) {
  detail::check_roles(spec);
  SingularProduct out;
  out.p_max = p_max;
  auto primes = sieve_primes(p_max);
  out.factors.resize(primes.size());
  parallel_for(primes.size(), jobs, [&](std::size_t i) {
    std::uint64_t p = primes[i];
    out.factors[i] = beta_p_stabilized(spec, p, stabilization_threshold(spec, p) + extra_depth);
  });
  out.exact = 1;
  for (const auto& f : out.factors) {
    out.exact *= f.value;
    if (!f.stabilized) out.unstabilized.push_back(f.p);
    if (2 * f.p > p_max) {
      double dp = static_cast<double>(f.p);
      out.fitted_c = std::max(out.fitted_c, dp * dp * std::abs(to_double(f.value - 1)));
    }
  }
  out.value = to_double(out.exact);
  if (p_max > 0) out.tail_halfwidth = std::abs(out.value) * out.fitted_c / static_cast<double>(p_max);
  return out;
}

// Vol(K) ∏_j 2π/√(-D_j), with the volume error scaled along.
inline VolumeEstimate beta_infinity(const CorrelationSpec& spec, std::uint64_t seed = 1,
                                    std::uint64_t samples = 1'000'000) {
  detail::check_roles(spec);
  VolumeEstimate v = spec.body.volume(seed, samples);
  double factor = 1;
  for (const auto& r : spec.roles)
    if (r.kind == Role::Kind::QForm)
      factor *= 2 * std::numbers::pi / std::sqrt(static_cast<double>(-r.form.discriminant()));
  v.value *= factor;
  v.abs_error *= factor;
  return v;
}

}  // namespace qfp
