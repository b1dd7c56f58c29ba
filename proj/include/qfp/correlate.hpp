#pragma once

// Exact correlation sums Σ_{n ∈ ℤ^d ∩ K} ∏ Λ(ψ_i(n)) ∏ R_{f_j}(ψ_j(n)), the
// named special cases, and prediction-vs-observation reports.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/convex.hpp"
#include "qfp/errors.hpp"
#include "qfp/linsys.hpp"
#include "qfp/localfac.hpp"
#include "qfp/parallel.hpp"
#include "qfp/qform.hpp"
#include "qfp/roles.hpp"
#include "qfp/wtrick.hpp"

namespace qfp {

// raw: Λ with prime powers, R_f. excluded: Λ' (primes above N^{2γ}) and R_f
// zeroed on X₀.
enum class Variant { raw, excluded };

inline const char* to_string(Variant v) { return v == Variant::raw ? "raw" : "excluded"; }

inline constexpr std::uint64_t kCorrelationTableLimit = 10'000'000;
inline constexpr std::uint64_t kPointBudget1d = 10'000'000;
// Counted after rows with a vanishing row-constant factor are dropped.
inline constexpr std::uint64_t kPointBudget2d = 1'000'000'000;
inline constexpr std::uint64_t kPointBudget3d = 10'000'000;
inline constexpr std::size_t kChunks1d = 256;

struct CorrelationOptions {
  Variant variant = Variant::raw;
  TrickParams trick;  // γ, C1, w for the excluded variant; N is taken from the CorrelationSpec
  unsigned jobs = 1;
};

// Dense value tables on [0, N], one per distinct role.
class RoleTables {
 public:
  RoleTables(const std::vector<Role>& roles, std::uint64_t N, const CorrelationOptions& opt) : N_(N) {
    if (N > kCorrelationTableLimit)
      throw BudgetError("value tables up to " + std::to_string(N) + " exceed the limit " +
                        std::to_string(kCorrelationTableLimit));
    TrickParams trick = opt.trick;
    trick.N = static_cast<double>(std::max<std::uint64_t>(N, 16));
    for (const auto& r : roles) {
      auto key = to_string(r);
      if (tables_.count(key)) continue;
      std::vector<double> t;
      switch (r.kind) {
        case Role::Kind::VonMangoldt: t = von_mangoldt(opt, trick); break;
        case Role::Kind::QForm: t = representations(r.form, opt, trick); break;
        case Role::Kind::Divisor: {
          auto tau = divisor_count_table(N);
          t.assign(tau.begin(), tau.end());
          break;
        }
      }
      tables_.emplace(key, std::move(t));
    }
  }

  const std::vector<double>& operator[](const Role& r) const { return tables_.at(to_string(r)); }
  std::uint64_t limit() const { return N_; }

 private:
  const VonMangoldtTable& vm() {
    if (!vm_) vm_.emplace(N_);
    return *vm_;
  }
  const SieveTable& sieve() {
    if (!sieve_) sieve_.emplace(N_);
    return *sieve_;
  }

  std::vector<double> von_mangoldt(const CorrelationOptions& opt, const TrickParams& trick) {
    auto t = vm().dense();
    if (opt.variant == Variant::excluded) {
      const double floor_value = std::pow(trick.N, 2 * trick.gamma());
      for (std::uint64_t n = 0; n <= N_; ++n) {
        auto e = vm().entry(n);
        if (!e || e->e != 1 || !(static_cast<double>(n) > floor_value)) t[n] = 0;
      }
    }
    return t;
  }

  std::vector<double> representations(const PDBQF& f, const CorrelationOptions& opt, const TrickParams& trick) {
    auto rt = build_rep_table(f, N_, opt.jobs);
    std::vector<double> t(rt.counts.begin(), rt.counts.end());
    if (opt.variant == Variant::excluded) {
      t[0] = 0;
      const SieveTable& sv = sieve();
      const std::size_t chunks = kChunks1d;
      parallel_for(chunks, opt.jobs, [&](std::size_t c) {
        std::uint64_t lo = std::max<std::uint64_t>(1, (N_ + 1) * c / chunks), hi = (N_ + 1) * (c + 1) / chunks;
        for (std::uint64_t n = lo; n < hi; ++n)
          if (t[n] != 0 && x0_contains(n, trick, &sv)) t[n] = 0;
      });
    }
    return t;
  }

  std::uint64_t N_;
  std::optional<VonMangoldtTable> vm_;
  std::optional<SieveTable> sieve_;
  std::map<std::string, std::vector<double>> tables_;
};

namespace detail {

// Rows of the body, split into fixed slabs; each row is reduced to the forms
// that vary along the last coordinate.
class RowPlan {
 public:
  RowPlan(const CorrelationSpec& spec, const RoleTables& tables) : spec_(spec) {
    for (const auto& r : spec.roles) cols_.push_back(&tables[r]);
    const int d = spec.system.d;
    const auto lo = spec.body.lo()[0], hi = spec.body.hi()[0];
    if (d == 1) {
      const auto len = static_cast<std::uint64_t>(std::max<std::int64_t>(0, hi - lo + 1));
      const std::uint64_t chunks = std::min<std::uint64_t>(kChunks1d, std::max<std::uint64_t>(len, 1));
      for (std::uint64_t c = 0; c < chunks; ++c) {
        auto a = lo + static_cast<std::int64_t>(len * c / chunks);
        auto b = lo + static_cast<std::int64_t>(len * (c + 1) / chunks) - 1;
        slabs_.push_back({a, b});
      }
    } else {
      for (auto v = lo; v <= hi; ++v) slabs_.push_back({v, v});
    }
  }

  struct Varying {
    const double* table;
    std::int64_t base;
    std::int64_t slope;
  };

  std::size_t slabs() const { return slabs_.size(); }

  // Calls fn(row_constant, varying, l, h) for each row of slab k that is not
  // killed by a zero row-constant factor.
  template <class Fn>
  void for_each_live_row(std::size_t k, Fn&& fn) const {
    const int d = spec_.system.d;
    const std::int64_t N = spec_.N;
    std::vector<Varying> varying;
    spec_.body.for_each_row(
        [&](std::vector<std::int64_t>& x, std::int64_t l, std::int64_t h) {
          double konst = 1;
          varying.clear();
          for (std::size_t i = 0; i < cols_.size(); ++i) {
            const auto& f = spec_.system[i];
            std::int64_t base = f.constant;
            for (int c = 0; c + 1 < d; ++c) base += f.linear[c] * x[c];
            const std::int64_t slope = f.linear[d - 1];
            const std::int64_t at_l = base + slope * l, at_h = base + slope * h;
            if (std::min(at_l, at_h) < 0 || std::max(at_l, at_h) > N)
              throw StateError("form " + std::to_string(i) + " leaves [0, N] inside the body");
            if (slope == 0) {
              konst *= (*cols_[i])[static_cast<std::size_t>(base)];
              if (konst == 0) return;
            } else {
              varying.push_back({cols_[i]->data(), base, slope});
            }
          }
          fn(konst, varying, l, h);
        },
        slabs_[k].first, slabs_[k].second);
  }

 private:
  const CorrelationSpec& spec_;
  std::vector<const std::vector<double>*> cols_;
  std::vector<std::pair<std::int64_t, std::int64_t>> slabs_;
};

inline std::uint64_t point_budget(int d) {
  return d == 1 ? kPointBudget1d : d == 2 ? kPointBudget2d : kPointBudget3d;
}

}  // namespace detail

// Exact enumeration with tables prepared by the caller (reused across calls).
inline double correlation_sum(const CorrelationSpec& spec, const RoleTables& tables, unsigned jobs = 1) {
  if (static_cast<std::uint64_t>(spec.N) > tables.limit())
    throw ConfigError("value tables stop at " + std::to_string(tables.limit()) + " < N = " + std::to_string(spec.N));
  detail::RowPlan plan(spec, tables);
  const std::size_t S = plan.slabs();

  std::vector<std::uint64_t> live(S, 0);
  parallel_for(S, jobs, [&](std::size_t k) {
    plan.for_each_live_row(k, [&](double, const auto&, std::int64_t l, std::int64_t h) {
      live[k] += static_cast<std::uint64_t>(h - l + 1);
    });
  });
  std::uint64_t points = 0;
  for (auto c : live) points += c;
  const auto budget = detail::point_budget(spec.system.d);
  if (points > budget)
    throw BudgetError(std::to_string(points) + " lattice points to visit in dimension " + std::to_string(spec.system.d) +
                      " exceeds the budget " + std::to_string(budget));

  std::vector<double> part(S, 0.0);
  parallel_for(S, jobs, [&](std::size_t k) {
    NeumaierSum acc;
    plan.for_each_live_row(k, [&](double konst, const auto& varying, std::int64_t l, std::int64_t h) {
      NeumaierSum row;
      for (std::int64_t v = l; v <= h; ++v) {
        double prod = konst;
        for (const auto& f : varying) {
          prod *= f.table[f.base + f.slope * v];
          if (prod == 0) break;
        }
        if (prod != 0) row += prod;
      }
      acc += row.value();
    });
    part[k] = acc.value();
  });
  NeumaierSum total;
  for (double v : part) total += v;
  return total.value();
}

inline double correlation_sum(const CorrelationSpec& spec, const CorrelationOptions& opt = {}) {
  RoleTables tables(spec.roles, static_cast<std::uint64_t>(spec.N), opt);
  return correlation_sum(spec, tables, opt.jobs);
}

inline double correlation_sum(const CorrelationSpec& spec, Variant variant, unsigned jobs = 1) {
  CorrelationOptions opt;
  opt.variant = variant;
  opt.jobs = jobs;
  return correlation_sum(spec, opt);
}

// ---------------------------------------------------------------------------
// Prediction vs observation

struct CompareOptions {
  CorrelationOptions correlation;
  std::uint64_t p_max = 1000;
  unsigned extra_depth = 3;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1'000'000;
};

struct ComparisonReport {
  double empirical = 0;
  double predicted = 0;
  double beta_infinity = 0;
  double beta_infinity_error = 0;
  double partial_product = 0;
  Rational partial_product_exact;
  double tail_halfwidth = 0;
  std::optional<double> relative_error;  // absent when the prediction is 0
  std::vector<std::uint64_t> unstabilized;
  bool finite_complexity = true;
  // echo
  std::int64_t N = 0;
  Variant variant = Variant::raw;
  unsigned w = 0;
  double gamma = 0;
  double C1 = 0;
  std::uint64_t p_max = 0;
  std::uint64_t seed = 0;
  const char* volume_method = "";
};

inline ComparisonReport compare(const CorrelationSpec& spec, const CompareOptions& opt = {}) {
  ComparisonReport r;
  r.N = spec.N;
  r.variant = opt.correlation.variant;
  r.w = opt.correlation.trick.w;
  r.gamma = opt.correlation.trick.gamma();
  r.C1 = opt.correlation.trick.C1;
  r.p_max = opt.p_max;
  r.seed = opt.seed;
  r.finite_complexity = spec.finite;

  r.empirical = correlation_sum(spec, opt.correlation);
  auto binf = beta_infinity(spec, opt.seed, opt.samples);
  r.beta_infinity = binf.value;
  r.beta_infinity_error = binf.abs_error;
  r.volume_method = to_string(binf.method);
  auto sp = singular_product(spec, opt.p_max, opt.extra_depth, opt.correlation.jobs);
  r.partial_product = sp.value;
  r.partial_product_exact = sp.exact;
  r.tail_halfwidth = sp.tail_halfwidth;
  r.unstabilized = sp.unstabilized;
  r.predicted = r.beta_infinity * r.partial_product;
  if (r.predicted != 0) r.relative_error = std::abs(r.empirical - r.predicted) / std::abs(r.predicted);
  return r;
}

// ---------------------------------------------------------------------------
// Named sums

// Σ Λ(a)Λ(a+d)⋯Λ(a+(k-1)d) R(d) over ap_body(k, N).
inline double ap_s2s_sum(int k, std::int64_t N, unsigned jobs = 1) {
  if (k < 2) throw DomainError("ap_s2s_sum needs k >= 2");
  return correlation_sum(ap_spec(k, N), Variant::raw, jobs);
}

// Σ_{n ≤ N} Λ(n) R_{x²+y²}(n). The system (n, n) is not of finite complexity.
inline CorrelationSpec lambda_r_spec(std::int64_t N) {
  AffineSystem sys(1, {{{1}, 0}, {{1}, 0}});
  return CorrelationSpec(sys, {Role::von_mangoldt(), Role::qform(PDBQF(1, 0, 1))}, box_body({1}, {N}), N, true);
}

inline double lambda_r_sum(std::int64_t N, unsigned jobs = 1) {
  if (N < 2) return 0;
  return correlation_sum(lambda_r_spec(N), Variant::raw, jobs);
}

// Σ_{n ∈ [N]^d} ∏_i Λ(2n_i + 1) ∏_{j ≠ k} R(n_j + n_k + 1), the second
// product over ordered pairs.
inline CorrelationSpec balog_spec(int d, std::int64_t N) {
  if (d < 2) throw DomainError("balog_sum needs d >= 2");
  if (d > 3) throw BudgetError("balog_sum is limited to d <= 3");
  if (N < 1) throw DomainError("balog_sum needs N >= 1");
  std::vector<AffineForm> forms;
  std::vector<Role> roles;
  for (int i = 0; i < d; ++i) {
    AffineForm f{std::vector<std::int64_t>(d, 0), 1};
    f.linear[i] = 2;
    forms.push_back(f);
    roles.push_back(Role::von_mangoldt());
  }
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      if (j == k) continue;
      AffineForm f{std::vector<std::int64_t>(d, 0), 1};
      f.linear[j] = 1;
      f.linear[k] = 1;
      forms.push_back(f);
      roles.push_back(Role::qform(PDBQF(1, 0, 1)));
    }
  return CorrelationSpec(AffineSystem(d, forms), roles, box_body(std::vector<std::int64_t>(d, 1), std::vector<std::int64_t>(d, N)),
                         2 * N + 1, true);
}

inline double balog_sum(int d, std::int64_t N, unsigned jobs = 1) {
  auto spec = balog_spec(d, N);
  std::uint64_t points = 1;
  for (int i = 0; i < d; ++i) points *= static_cast<std::uint64_t>(N);
  if (points > detail::point_budget(d)) throw BudgetError("balog_sum: N^d = " + std::to_string(points) + " over budget");
  return correlation_sum(spec, Variant::raw, jobs);
}

// Σ ∏Λ(ψ_i(n)) ∏τ(ψ_j(n)); only von Mangoldt and divisor roles.
inline double lambda_tau_sum(const CorrelationSpec& spec, unsigned jobs = 1) {
  for (const auto& r : spec.roles)
    if (r.kind == Role::Kind::QForm) throw ConfigError("lambda_tau_sum takes von Mangoldt and divisor roles only");
  return correlation_sum(spec, Variant::raw, jobs);
}

}  // namespace qfp
