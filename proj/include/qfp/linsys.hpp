#pragma once

// Affine-linear systems Z^d -> Z^t and their local divisor densities.

#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/convex.hpp"
#include "qfp/errors.hpp"

namespace qfp {

struct AffineForm {
  std::vector<std::int64_t> linear;
  std::int64_t constant = 0;

  std::int64_t operator()(const std::vector<std::int64_t>& x) const {
    std::int64_t v = constant;
    for (std::size_t i = 0; i < linear.size(); ++i) v += linear[i] * x[i];
    return v;
  }
  bool linear_is_zero() const {
    for (auto c : linear)
      if (c) return false;
    return true;
  }
};

struct AffineSystem {
  int d = 0;
  std::vector<AffineForm> forms;

  AffineSystem() = default;
  AffineSystem(int d_, std::vector<AffineForm> forms_) : d(d_), forms(std::move(forms_)) {
    if (d < 1) throw ConfigError("system dimension must be >= 1");
    for (std::size_t i = 0; i < forms.size(); ++i)
      if (static_cast<int>(forms[i].linear.size()) != d)
        throw ConfigError("form " + std::to_string(i) + " has " + std::to_string(forms[i].linear.size()) +
                          " coefficients, expected " + std::to_string(d));
  }

  std::size_t size() const { return forms.size(); }
  const AffineForm& operator[](std::size_t i) const { return forms[i]; }
};

// (a, a+d, ..., a+(k-1)d, d) in variables (a, d).
inline AffineSystem ap_system(int k, bool with_difference = true) {
  std::vector<AffineForm> f;
  for (int i = 0; i < k; ++i) f.push_back({{1, i}, 0});
  if (with_difference) f.push_back({{0, 1}, 0});
  return AffineSystem(2, std::move(f));
}

namespace detail {

// gcd of all 2x2 minors of the pair; 0 iff the linear parts are proportional.
inline std::int64_t minor_gcd(const AffineForm& u, const AffineForm& v) {
  std::int64_t g = 0;
  const std::size_t d = u.linear.size();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) {
      __int128 m = static_cast<__int128>(u.linear[a]) * v.linear[b] - static_cast<__int128>(u.linear[b]) * v.linear[a];
      g = std::gcd(g, static_cast<std::int64_t>(m < 0 ? -m : m));
    }
  return g;
}

inline std::int64_t content(const AffineForm& u) {
  std::int64_t g = 0;
  for (auto c : u.linear) g = std::gcd(g, c < 0 ? -c : c);
  return g;
}

}  // namespace detail

// No two linear parts are proportional (a zero linear part is proportional to
// everything).
inline bool finite_complexity(const AffineSystem& sys) {
  for (std::size_t i = 0; i < sys.size(); ++i)
    for (std::size_t j = i + 1; j < sys.size(); ++j)
      if (detail::minor_gcd(sys[i], sys[j]) == 0) return false;
  return true;
}

// Primes p <= bound modulo which some linear part vanishes or some pair of
// linear parts becomes proportional.
inline std::set<std::uint64_t> exceptional_primes(const AffineSystem& sys, std::uint64_t bound) {
  if (!finite_complexity(sys)) throw DomainError("system does not have finite complexity");
  std::vector<std::int64_t> gs;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    gs.push_back(detail::content(sys[i]));
    for (std::size_t j = i + 1; j < sys.size(); ++j) gs.push_back(detail::minor_gcd(sys[i], sys[j]));
  }
  std::set<std::uint64_t> out;
  for (auto p : sieve_primes(bound))
    for (auto g : gs)
      if (g % static_cast<std::int64_t>(p) == 0) {
        out.insert(p);
        break;
      }
  return out;
}

// True when, mod p, some form is identically zero or two forms cut out the
// same hyperplane (parallel linear parts with a common zero).
inline bool degenerate_mod_p(const AffineSystem& sys, std::uint64_t p) {
  auto P = static_cast<std::int64_t>(p);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& u = sys[i];
    if (detail::content(u) % P == 0) {
      if (floor_mod(u.constant, P) == 0) return true;
      continue;
    }
    for (std::size_t j = i + 1; j < sys.size(); ++j) {
      const auto& v = sys[j];
      if (detail::content(v) % P == 0) continue;
      if (detail::minor_gcd(u, v) % P != 0) continue;
      // v ≡ λ u on linear parts; find λ from a pivot coordinate.
      std::size_t k = 0;
      while (floor_mod(u.linear[k], P) == 0) ++k;
      std::int64_t inv = 1;
      {
        // Fermat inverse of u.linear[k] mod p.
        std::int64_t base = floor_mod(u.linear[k], P), e = P - 2;
        inv = 1;
        while (e > 0) {
          if (e & 1) inv = static_cast<std::int64_t>(static_cast<__int128>(inv) * base % P);
          base = static_cast<std::int64_t>(static_cast<__int128>(base) * base % P);
          e >>= 1;
        }
      }
      std::int64_t lambda = static_cast<std::int64_t>(static_cast<__int128>(floor_mod(v.linear[k], P)) * inv % P);
      if (floor_mod(v.constant - lambda * floor_mod(u.constant, P), P) == 0) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Local divisor densities α_Ψ(d_1, ..., d_t)

struct DensityQuery {
  AffineSystem system;
  std::vector<std::uint64_t> moduli;

  DensityQuery() = default;
  DensityQuery(AffineSystem s, std::vector<std::uint64_t> m) : system(std::move(s)), moduli(std::move(m)) {
    if (moduli.size() != system.size())
      throw ConfigError("got " + std::to_string(moduli.size()) + " moduli for " + std::to_string(system.size()) +
                        " forms");
    for (auto q : moduli)
      if (q == 0) throw ConfigError("moduli must be positive");
  }

  std::uint64_t lcm() const {
    std::uint64_t l = 1;
    for (auto q : moduli) {
      l = l / std::gcd(l, q);
      if (q > 0 && l > std::numeric_limits<std::uint64_t>::max() / q) throw BudgetError("moduli lcm overflows");
      l *= q;
    }
    return l;
  }
};

inline constexpr std::uint64_t kAlphaBruteForceBudget = 50'000'000;

// E_{n in (Z/mZ)^d} prod 1_{ψ_i(n) ≡ 0 mod d_i}, by scanning the grid.
inline Rational alpha_bruteforce(const DensityQuery& q) {
  const std::uint64_t m = q.lcm();
  const int d = q.system.d;
  __int128 cells = 1;
  for (int i = 0; i < d; ++i) {
    cells *= m;
    if (cells > static_cast<__int128>(kAlphaBruteForceBudget))
      throw BudgetError("brute-force density grid " + std::to_string(m) + "^" + std::to_string(d) +
                        " exceeds budget; use alpha_hensel");
  }
  const std::size_t t = q.system.size();
  auto M = static_cast<std::int64_t>(m);
  // Track ψ_i(n) mod d_i incrementally along an odometer over the grid.
  std::vector<std::int64_t> val(t), mod(t);
  for (std::size_t i = 0; i < t; ++i) {
    mod[i] = static_cast<std::int64_t>(q.moduli[i]);
    val[i] = floor_mod(q.system[i].constant, mod[i]);
  }
  std::vector<std::int64_t> x(d, 0);
  std::uint64_t hits = 0;
  for (;;) {
    bool ok = true;
    for (std::size_t i = 0; i < t && ok; ++i) ok = val[i] == 0;
    hits += ok;
    int k = d - 1;
    for (; k >= 0; --k) {
      if (x[k] + 1 < M) {
        ++x[k];
        for (std::size_t i = 0; i < t; ++i) val[i] = floor_mod(val[i] + q.system[i].linear[k], mod[i]);
        break;
      }
      for (std::size_t i = 0; i < t; ++i)
        val[i] = floor_mod(val[i] - static_cast<std::int64_t>(static_cast<__int128>(q.system[i].linear[k]) * (M - 1) % mod[i]), mod[i]);
      x[k] = 0;
    }
    if (k < 0) break;
  }
  return Rational(BigInt(hits), BigInt(static_cast<std::uint64_t>(cells)));
}

namespace detail {

inline std::int64_t inverse_mod_prime(std::int64_t a, std::int64_t p) {
  std::int64_t r = 1, e = p - 2;
  a = floor_mod(a, p);
  while (e > 0) {
    if (e & 1) r = r * a % p;
    a = a * a % p;
    e >>= 1;
  }
  return r;
}

// Row echelon data for L u ≡ rhs (mod p): pivot columns, reduced rows, and
// the row operations to apply to a right-hand side.
struct ModPSolver {
  std::int64_t p = 2;
  int d = 0;
  std::vector<std::vector<std::int64_t>> T;   // transform: reduced = T * original
  std::vector<std::vector<std::int64_t>> R;   // reduced matrix
  std::vector<int> pivots;                    // pivot column of row r (first `rank` rows)
  int rank = 0;

  ModPSolver(const std::vector<std::vector<std::int64_t>>& L, std::int64_t p_, int d_) : p(p_), d(d_) {
    const int rows = static_cast<int>(L.size());
    R.assign(rows, std::vector<std::int64_t>(d));
    T.assign(rows, std::vector<std::int64_t>(rows, 0));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < d; ++c) R[r][c] = floor_mod(L[r][c], p);
      T[r][r] = 1;
    }
    int row = 0;
    for (int col = 0; col < d && row < rows; ++col) {
      int piv = row;
      while (piv < rows && R[piv][col] == 0) ++piv;
      if (piv == rows) continue;
      std::swap(R[piv], R[row]);
      std::swap(T[piv], T[row]);
      std::int64_t inv = inverse_mod_prime(R[row][col], p);
      for (auto& v : R[row]) v = v * inv % p;
      for (auto& v : T[row]) v = v * inv % p;
      for (int r = 0; r < rows; ++r) {
        if (r == row || R[r][col] == 0) continue;
        std::int64_t f = R[r][col];
        for (int c = 0; c < d; ++c) R[r][c] = floor_mod(R[r][c] - f * R[row][c], p);
        for (int c = 0; c < rows; ++c) T[r][c] = floor_mod(T[r][c] - f * T[row][c], p);
      }
      pivots.push_back(col);
      ++row;
    }
    rank = row;
  }

  // Enumerates all u in (Z/p)^d with L u ≡ rhs; returns false if none.
  template <class Fn>
  bool for_each_solution(const std::vector<std::int64_t>& rhs, Fn&& fn) const {
    const int rows = static_cast<int>(R.size());
    std::vector<std::int64_t> r(rows, 0);
    for (int i = 0; i < rows; ++i) {
      std::int64_t s = 0;
      for (int j = 0; j < rows; ++j) s += T[i][j] * rhs[j];
      r[i] = floor_mod(s, p);
    }
    for (int i = rank; i < rows; ++i)
      if (r[i] != 0) return false;
    std::vector<int> free_cols;
    std::vector<bool> is_pivot(d, false);
    for (int c : pivots) is_pivot[c] = true;
    for (int c = 0; c < d; ++c)
      if (!is_pivot[c]) free_cols.push_back(c);
    std::vector<std::int64_t> u(d, 0);
    std::vector<std::int64_t> fv(free_cols.size(), 0);
    for (;;) {
      for (std::size_t k = 0; k < free_cols.size(); ++k) u[free_cols[k]] = fv[k];
      for (int i = 0; i < rank; ++i) {
        std::int64_t s = r[i];
        for (int c : free_cols) s -= R[i][c] * u[c];
        u[pivots[i]] = floor_mod(s, p);
      }
      fn(static_cast<const std::vector<std::int64_t>&>(u));
      std::size_t k = 0;
      while (k < fv.size() && ++fv[k] == p) fv[k++] = 0;
      if (k == fv.size()) break;
    }
    return true;
  }
};

}  // namespace detail

// Density for moduli that are all powers of one prime, by lifting digit by
// digit through p-adic levels. States are residue classes of the still-active
// forms with multiplicities, never explicit solution lists.
inline Rational alpha_hensel(const DensityQuery& q) {
  std::uint64_t prime = 0;
  std::vector<unsigned> e(q.moduli.size(), 0);
  for (std::size_t i = 0; i < q.moduli.size(); ++i) {
    std::uint64_t m = q.moduli[i];
    if (m == 1) continue;
    auto f = factorize_trial(m);
    if (f.factors.size() != 1 || (prime && f.factors[0].p != prime))
      throw DomainError("alpha_hensel needs moduli that are powers of a single prime");
    prime = f.factors[0].p;
    e[i] = f.factors[0].e;
  }
  if (prime == 0) return Rational(1);
  const auto p = static_cast<std::int64_t>(prime);
  const int d = q.system.d;
  unsigned E = *std::max_element(e.begin(), e.end());
  const std::size_t t = q.system.size();

  std::vector<std::int64_t> mod(t);
  for (std::size_t i = 0; i < t; ++i) mod[i] = static_cast<std::int64_t>(ipow(prime, e[i]));

  // State: values ψ_i(partial a) mod p^{e_i} for active forms.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < t; ++i)
    if (e[i] >= 1) active.push_back(i);
  std::map<std::vector<std::int64_t>, BigInt> states;
  {
    std::vector<std::int64_t> s;
    for (auto i : active) s.push_back(floor_mod(q.system[i].constant, mod[i]));
    states[s] = 1;
  }
  BigInt multiplier = 1;
  std::int64_t pk = 1;
  for (unsigned k = 0; k < E; ++k, pk *= p) {
    // Forms still constrained at this level; the state keeps them first.
    std::vector<std::size_t> next_active;
    std::vector<std::size_t> pos;  // position in the current state vector
    for (std::size_t a = 0; a < active.size(); ++a)
      if (e[active[a]] >= k + 1) {
        next_active.push_back(active[a]);
        pos.push_back(a);
      }
    std::vector<std::vector<std::int64_t>> L;
    for (auto i : next_active) L.push_back(q.system[i].linear);
    detail::ModPSolver solver(L, p, d);

    if (solver.rank == static_cast<int>(next_active.size())) {
      // Independent mod p: every later level has exactly p^{d-|A_j|} lifts.
      BigInt total = 0;
      for (const auto& [s, c] : states) {
        bool ok = true;
        for (std::size_t a = 0; a < pos.size() && ok; ++a) ok = s[pos[a]] % pk == 0;
        if (ok) total += c;
      }
      BigInt tail = 1;
      for (unsigned j = k; j < E; ++j) {
        std::size_t active_j = 0;
        for (auto i : next_active) active_j += e[i] >= j + 1;
        tail *= boost::multiprecision::pow(BigInt(p), static_cast<unsigned>(d - static_cast<int>(active_j)));
      }
      BigInt count = total * tail * multiplier;
      return Rational(count, boost::multiprecision::pow(BigInt(p), E * d));
    }

    std::map<std::vector<std::int64_t>, BigInt> next;
    for (const auto& [s, c] : states) {
      std::vector<std::int64_t> rhs(next_active.size());
      bool ok = true;
      for (std::size_t a = 0; a < pos.size() && ok; ++a) {
        if (s[pos[a]] % pk != 0) ok = false;
        else rhs[a] = floor_mod(-(s[pos[a]] / pk), p);
      }
      if (!ok) continue;
      solver.for_each_solution(rhs, [&](const std::vector<std::int64_t>& u) {
        std::vector<std::int64_t> ns;
        for (std::size_t a = 0; a < next_active.size(); ++a) {
          std::size_t i = next_active[a];
          if (e[i] < k + 2) continue;  // constraint completes at this level
          std::int64_t lu = 0;
          for (int c = 0; c < d; ++c) lu += q.system[i].linear[c] * u[c];
          std::int64_t v = floor_mod(static_cast<std::int64_t>((static_cast<__int128>(s[pos[a]]) +
                                                                static_cast<__int128>(pk) * floor_mod(lu, mod[i])) %
                                                               mod[i]),
                                     mod[i]);
          ns.push_back(v);
        }
        next[ns] += c;
      });
    }
    // Forms whose constraint completes here leave the state.
    std::vector<std::size_t> kept;
    for (auto i : next_active)
      if (e[i] >= k + 2) kept.push_back(i);
    active = kept;
    states = std::move(next);
    if (states.empty()) return Rational(0);
  }
  BigInt total = 0;
  for (const auto& [s, c] : states) total += c;
  return Rational(total * multiplier, boost::multiprecision::pow(BigInt(p), E * d));
}

// CRT split, α per prime via Hensel lifting, product of the factors.
inline Rational alpha(const DensityQuery& q) {
  std::set<std::uint64_t> primes;
  for (auto m : q.moduli)
    for (const auto& f : factorize_trial(m).factors) primes.insert(f.p);
  Rational out = 1;
  for (auto p : primes) {
    std::vector<std::uint64_t> local;
    for (auto m : q.moduli) local.push_back(ipow(p, valuation(static_cast<std::int64_t>(m), p)));
    out *= alpha_hensel(DensityQuery(q.system, local));
    if (out == 0) break;
  }
  return out;
}

// #{n in K ∩ Z^d : p^2 | prod ψ_i(n)}.
inline std::uint64_t square_divisibility_count(const AffineSystem& sys, const ConvexBody& body, std::uint64_t p) {
  if (body.dimension() != sys.d) throw ConfigError("body and system dimensions differ");
  if (degenerate_mod_p(sys, p))
    throw DomainError("p = " + std::to_string(p) + " is exceptional for this system");
  std::uint64_t count = 0;
  body.for_each_point([&](const std::vector<std::int64_t>& x) {
    unsigned v = 0;
    for (const auto& f : sys.forms) {
      std::int64_t y = f(x);
      v += y == 0 ? 2 : valuation(y, p);
      if (v >= 2) break;
    }
    count += v >= 2;
  });
  return count;
}

}  // namespace qfp
