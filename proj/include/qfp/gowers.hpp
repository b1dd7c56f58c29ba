#pragma once

// Gowers U^k[N] norms of sampled functions, k <= 3, by exact summation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/errors.hpp"
#include "qfp/parallel.hpp"

namespace qfp {

// g(1), ..., g(N); zero outside [1, N] unless a cyclic evaluation is asked for.
struct SampledFunction {
  std::uint64_t N = 0;
  std::vector<double> values;

  SampledFunction() = default;
  explicit SampledFunction(std::vector<double> v) : N(v.size()), values(std::move(v)) {}

  double operator()(std::int64_t x) const {
    return x >= 1 && static_cast<std::uint64_t>(x) <= N ? values[static_cast<std::size_t>(x - 1)] : 0.0;
  }
};

struct GowersResult {
  double average = 0;   // E_x E_h ∏_ω g(x + ω·h), signed
  double norm = 0;      // average^{2^{-k}} when the average is >= 0, else 0
  bool negative = false;
};

inline constexpr std::uint64_t kGowersMaxN1 = 1'000'000;
inline constexpr std::uint64_t kGowersMaxN2 = 4096;
inline constexpr std::uint64_t kGowersMaxN3 = 512;

namespace detail {

// Σ_{x ∈ [N]} P(x) Σ_{h ∈ [N]} P(x + h) for P given on [1, N] (index 0 is 1).
// Zero-extended: the inner sum is a suffix sum. Cyclic: the inner sum is the
// full total.
inline double pair_sum(const std::vector<double>& P, bool cyclic) {
  const std::size_t N = P.size();
  NeumaierSum out;
  if (cyclic) {
    NeumaierSum tot;
    for (double v : P) tot += v;
    // x + h for h = 1..N hits every residue once, including x itself at h = N
    for (double v : P) out += v * tot.value();
    return out.value();
  }
  std::vector<double> suffix(N + 1, 0);
  for (std::size_t i = N; i-- > 0;) suffix[i] = suffix[i + 1] + P[i];
  for (std::size_t i = 0; i < N; ++i) out += P[i] * suffix[i + 1];
  return out.value();
}

}  // namespace detail

inline GowersResult gowers_norm_detail(const SampledFunction& f, unsigned k, bool cyclic = false, unsigned jobs = 1) {
  const std::uint64_t N = f.N;
  if (k == 0) throw DomainError("Gowers norm needs k >= 1");
  if (N == 0) return {};
  if (k > 3) throw BudgetError("Gowers norms are only evaluated for k <= 3");
  const std::uint64_t limit = k == 1 ? kGowersMaxN1 : k == 2 ? kGowersMaxN2 : kGowersMaxN3;
  if (N > limit)
    throw BudgetError("U^" + std::to_string(k) + " norm at N = " + std::to_string(N) + " exceeds the budget N <= " +
                      std::to_string(limit));
  const auto n = static_cast<std::int64_t>(N);
  auto at = [&](std::int64_t x) {
    if (cyclic) x = floor_mod(x - 1, n) + 1;
    return f(x);
  };
  // Fix h_1..h_{k-1}, form P(y) = ∏_{ω'} g(y + ω'·h'), then pair up along h_k.
  double total = 0;
  if (k == 1) {
    total = detail::pair_sum(f.values, cyclic);
  } else if (k == 2) {
    std::vector<double> part(N);
    parallel_for(N, jobs, [&](std::size_t i) {
      auto h1 = static_cast<std::int64_t>(i + 1);
      std::vector<double> P(N);
      for (std::int64_t y = 1; y <= n; ++y) P[y - 1] = at(y) * at(y + h1);
      part[i] = detail::pair_sum(P, cyclic);
    });
    NeumaierSum s;
    for (double v : part) s += v;
    total = s.value();
  } else {
    std::vector<double> part(N);
    parallel_for(N, jobs, [&](std::size_t i) {
      auto h1 = static_cast<std::int64_t>(i + 1);
      std::vector<double> P(N);
      NeumaierSum s;
      for (std::int64_t h2 = 1; h2 <= n; ++h2) {
        for (std::int64_t y = 1; y <= n; ++y) P[y - 1] = at(y) * at(y + h1) * at(y + h2) * at(y + h1 + h2);
        s += detail::pair_sum(P, cyclic);
      }
      part[i] = s.value();
    });
    NeumaierSum s;
    for (double v : part) s += v;
    total = s.value();
  }
  GowersResult r;
  r.average = total / std::pow(static_cast<double>(N), static_cast<double>(k + 1));
  r.negative = r.average < 0;
  r.norm = r.negative ? 0.0 : std::pow(r.average, 1.0 / static_cast<double>(1u << k));
  return r;
}

inline double gowers_norm(const SampledFunction& f, unsigned k, bool cyclic = false, unsigned jobs = 1) {
  return gowers_norm_detail(f, k, cyclic, jobs).norm;
}

struct TrendPoint {
  std::uint64_t N = 0;
  GowersResult result;
};

// ‖builder(N) - 1‖_{U^k[N]} for each N.
inline std::vector<TrendPoint> uniformity_trend(const std::function<SampledFunction(std::uint64_t)>& builder,
                                                const std::vector<std::uint64_t>& Ns, unsigned k, bool cyclic = false,
                                                unsigned jobs = 1) {
  std::vector<TrendPoint> out;
  for (auto N : Ns) {
    SampledFunction f = builder(N);
    if (f.N != N) throw ConfigError("builder returned " + std::to_string(f.N) + " values for N = " + std::to_string(N));
    for (auto& v : f.values) v -= 1;
    out.push_back({N, gowers_norm_detail(f, k, cyclic, jobs)});
  }
  return out;
}

}  // namespace qfp
