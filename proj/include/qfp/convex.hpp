#pragma once

// Convex bodies given by closed halfspaces inside an integer bounding box.

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qfp/arith.hpp"
#include "qfp/errors.hpp"

namespace qfp {

inline constexpr int kMaxBodyDimension = 4;

// normal . x <= offset
struct Halfspace {
  std::vector<Rational> normal;
  Rational offset;
};

struct VolumeEstimate {
  enum class Method { exact2d, box, montecarlo };
  double value = 0;
  double abs_error = 0;
  Method method = Method::exact2d;
  std::uint64_t samples = 0;
};

inline const char* to_string(VolumeEstimate::Method m) {
  switch (m) {
    case VolumeEstimate::Method::exact2d: return "exact2d";
    case VolumeEstimate::Method::box: return "box";
    case VolumeEstimate::Method::montecarlo: return "montecarlo";
  }
  return "?";
}

class ConvexBody {
 public:
  // Integer-scaled constraint: a . x <= b.
  struct Row {
    std::vector<std::int64_t> a;
    std::int64_t b;
  };

  ConvexBody() = default;

  ConvexBody(std::vector<Halfspace> halfspaces, std::vector<std::int64_t> lo, std::vector<std::int64_t> hi)
      : d_(static_cast<int>(lo.size())), halfspaces_(std::move(halfspaces)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (d_ < 1 || d_ > kMaxBodyDimension)
      throw ConfigError("body dimension must be in [1, " + std::to_string(kMaxBodyDimension) + "]");
    if (hi_.size() != lo_.size()) throw ConfigError("bounding box bounds have different lengths");
    if (halfspaces_.empty()) throw ConfigError("body needs at least one halfspace");
    for (const auto& h : halfspaces_) {
      if (static_cast<int>(h.normal.size()) != d_)
        throw ConfigError("halfspace has " + std::to_string(h.normal.size()) + " coefficients, expected " +
                          std::to_string(d_));
      rows_.push_back(scale(h));
    }
  }

  int dimension() const { return d_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::int64_t>& lo() const { return lo_; }
  const std::vector<std::int64_t>& hi() const { return hi_; }

  bool contains(const std::vector<std::int64_t>& x) const {
    if (static_cast<int>(x.size()) != d_)
      throw ConfigError("point has dimension " + std::to_string(x.size()) + ", body has " + std::to_string(d_));
    for (int i = 0; i < d_; ++i)
      if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    for (const auto& r : rows_) {
      __int128 s = 0;
      for (int i = 0; i < d_; ++i) s += static_cast<__int128>(r.a[i]) * x[i];
      if (s > r.b) return false;
    }
    return true;
  }

  // Calls fn(prefix, lo, hi) for each prefix (x_0..x_{d-2}) whose row of
  // last-coordinate values [lo, hi] is non-empty. The leading coordinate is
  // restricted to [lead_lo, lead_hi] so callers can partition into slabs.
  template <class Fn>
  void for_each_row(Fn&& fn, std::int64_t lead_lo, std::int64_t lead_hi) const {
    std::vector<std::int64_t> x(d_, 0);
    if (d_ == 1) {
      auto [l, h] = tighten(x);
      l = std::max(l, lead_lo);
      h = std::min(h, lead_hi);
      if (l <= h) fn(x, l, h);
      return;
    }
    recurse_rows(x, 0, std::max(lead_lo, lo_[0]), std::min(lead_hi, hi_[0]), fn);
  }

  template <class Fn>
  void for_each_row(Fn&& fn) const {
    for_each_row(fn, lo_[0], hi_[0]);
  }

  template <class Fn>
  void for_each_point(Fn&& fn) const {
    for_each_row([&](std::vector<std::int64_t>& x, std::int64_t l, std::int64_t h) {
      for (std::int64_t v = l; v <= h; ++v) {
        x[d_ - 1] = v;
        fn(static_cast<const std::vector<std::int64_t>&>(x));
      }
    });
  }

  std::vector<std::vector<std::int64_t>> lattice_points() const {
    std::vector<std::vector<std::int64_t>> out;
    for_each_point([&](const std::vector<std::int64_t>& x) { out.push_back(x); });
    return out;
  }

  std::uint64_t count_points() const {
    std::uint64_t n = 0;
    for_each_row([&](const std::vector<std::int64_t>&, std::int64_t l, std::int64_t h) { n += h - l + 1; });
    return n;
  }

  // Vertices of body ∩ bbox, exact.
  std::vector<std::vector<Rational>> vertices() const;

  // Exact in d <= 2 and for axis-aligned boxes, Monte Carlo otherwise.
  VolumeEstimate volume(std::uint64_t seed = 1, std::uint64_t samples = 1'000'000) const;
  VolumeEstimate volume_monte_carlo(std::uint64_t seed, std::uint64_t samples) const;
  Rational volume_exact_2d() const;

  double bbox_volume() const {
    double v = 1;
    for (int i = 0; i < d_; ++i) v *= static_cast<double>(hi_[i] - lo_[i]);
    return v;
  }

 private:
  static Row scale(const Halfspace& h) {
    BigInt l = 1;
    auto fold = [&](const Rational& q) { l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(q)); };
    for (const auto& q : h.normal) fold(q);
    fold(h.offset);
    Row r;
    auto to64 = [](const Rational& q) {
      BigInt v = boost::multiprecision::numerator(q);
      if (v > BigInt(std::numeric_limits<std::int64_t>::max() / 4) ||
          v < BigInt(std::numeric_limits<std::int64_t>::min() / 4))
        throw ConfigError("halfspace coefficient too large");
      return v.convert_to<std::int64_t>();
    };
    for (const auto& q : h.normal) r.a.push_back(to64(q * Rational(l)));
    r.b = to64(h.offset * Rational(l));
    return r;
  }

  // Interval for the last coordinate given x_0..x_{d-2}.
  std::pair<std::int64_t, std::int64_t> tighten(const std::vector<std::int64_t>& x) const {
    std::int64_t l = lo_[d_ - 1], h = hi_[d_ - 1];
    for (const auto& r : rows_) {
      __int128 rest = r.b;
      for (int i = 0; i + 1 < d_; ++i) rest -= static_cast<__int128>(r.a[i]) * x[i];
      std::int64_t ad = r.a[d_ - 1];
      if (ad == 0) {
        if (rest < 0) return {1, 0};
        continue;
      }
      if (rest > std::numeric_limits<std::int64_t>::max() / 2) rest = std::numeric_limits<std::int64_t>::max() / 2;
      if (rest < std::numeric_limits<std::int64_t>::min() / 2) rest = std::numeric_limits<std::int64_t>::min() / 2;
      auto rr = static_cast<std::int64_t>(rest);
      if (ad > 0)
        h = std::min(h, floor_div(rr, ad));
      else
        l = std::max(l, ceil_div(rr, ad));
      if (l > h) return {1, 0};
    }
    return {l, h};
  }

  template <class Fn>
  void recurse_rows(std::vector<std::int64_t>& x, int level, std::int64_t from, std::int64_t to, Fn& fn) const {
    for (std::int64_t v = from; v <= to; ++v) {
      x[level] = v;
      if (level + 2 == d_) {
        auto [l, h] = tighten(x);
        if (l <= h) fn(x, l, h);
      } else {
        recurse_rows(x, level + 1, lo_[level + 1], hi_[level + 1], fn);
      }
    }
  }

  bool is_axis_aligned() const {
    for (const auto& r : rows_) {
      int nz = 0;
      for (auto c : r.a) nz += c != 0;
      if (nz > 1) return false;
    }
    return true;
  }

  int d_ = 0;
  std::vector<Halfspace> halfspaces_;
  std::vector<Row> rows_;
  std::vector<std::int64_t> lo_, hi_;
};

namespace detail {

// Solves A x = b over the rationals; false if singular.
inline bool solve_rational(std::vector<std::vector<Rational>> A, std::vector<Rational> b, std::vector<Rational>& x) {
  const std::size_t n = A.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && A[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || A[r][col] == 0) continue;
      Rational f = A[r][col] / A[col][col];
      for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
  return true;
}

template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  for (;;) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

inline std::vector<std::vector<Rational>> ConvexBody::vertices() const {
  std::vector<Halfspace> all = halfspaces_;
  for (int i = 0; i < d_; ++i) {
    Halfspace up, down;
    up.normal.assign(d_, Rational(0));
    down.normal.assign(d_, Rational(0));
    up.normal[i] = 1;
    up.offset = hi_[i];
    down.normal[i] = -1;
    down.offset = -lo_[i];
    all.push_back(up);
    all.push_back(down);
  }
  std::vector<std::vector<Rational>> out;
  detail::for_each_subset(all.size(), static_cast<std::size_t>(d_), [&](const std::vector<std::size_t>& idx) {
    std::vector<std::vector<Rational>> A;
    std::vector<Rational> b;
    for (auto i : idx) {
      A.push_back(all[i].normal);
      b.push_back(all[i].offset);
    }
    std::vector<Rational> x;
    if (!detail::solve_rational(A, b, x)) return;
    for (const auto& h : all) {
      Rational s = 0;
      for (int i = 0; i < d_; ++i) s += h.normal[i] * x[i];
      if (s > h.offset) return;
    }
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  });
  return out;
}

inline Rational ConvexBody::volume_exact_2d() const {
  if (d_ == 1) {
    auto v = vertices();
    if (v.size() < 2) return 0;
    Rational mn = v[0][0], mx = v[0][0];
    for (const auto& p : v) {
      mn = std::min(mn, p[0]);
      mx = std::max(mx, p[0]);
    }
    return mx - mn;
  }
  if (d_ != 2) throw DomainError("exact volume is only implemented for d <= 2");
  auto v = vertices();
  if (v.size() < 3) return 0;
  // Order by angle around the centroid; the polygon is convex so this is its boundary order.
  Rational cx = 0, cy = 0;
  for (const auto& p : v) {
    cx += p[0];
    cy += p[1];
  }
  cx /= static_cast<long>(v.size());
  cy /= static_cast<long>(v.size());
  std::sort(v.begin(), v.end(), [&](const auto& p, const auto& q) {
    double ap = std::atan2(to_double(p[1] - cy), to_double(p[0] - cx));
    double aq = std::atan2(to_double(q[1] - cy), to_double(q[0] - cx));
    return ap < aq;
  });
  Rational twice = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  if (twice < 0) twice = -twice;
  return twice / 2;
}

inline VolumeEstimate ConvexBody::volume_monte_carlo(std::uint64_t seed, std::uint64_t samples) const {
  if (samples == 0) throw ConfigError("Monte Carlo volume needs at least one sample");
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (const auto& h : halfspaces_) {
    std::vector<double> row;
    for (const auto& q : h.normal) row.push_back(to_double(q));
    a.push_back(row);
    b.push_back(to_double(h.offset));
  }
  std::uint64_t hits = 0;
  std::vector<double> x(d_);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (int i = 0; i < d_; ++i) {
      double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      x[i] = static_cast<double>(lo_[i]) + u * static_cast<double>(hi_[i] - lo_[i]);
    }
    bool in = true;
    for (std::size_t r = 0; r < a.size() && in; ++r) {
      double t = 0;
      for (int i = 0; i < d_; ++i) t += a[r][i] * x[i];
      in = t <= b[r];
    }
    hits += in;
  }
  double p = static_cast<double>(hits) / static_cast<double>(samples);
  double box = bbox_volume();
  VolumeEstimate est;
  est.value = p * box;
  est.abs_error = 2.576 * std::sqrt(p * (1 - p) / static_cast<double>(samples)) * box;
  est.method = VolumeEstimate::Method::montecarlo;
  est.samples = samples;
  return est;
}

inline VolumeEstimate ConvexBody::volume(std::uint64_t seed, std::uint64_t samples) const {
  for (int i = 0; i < d_; ++i)
    if (hi_[i] < lo_[i]) return {0, 0, VolumeEstimate::Method::box, 0};
  if (d_ <= 2) return {to_double(volume_exact_2d()), 0, VolumeEstimate::Method::exact2d, 0};
  if (is_axis_aligned()) {
    double v = 1;
    for (int i = 0; i < d_; ++i) {
      Rational l = lo_[i], h = hi_[i];
      for (const auto& hs : halfspaces_) {
        if (hs.normal[i] > 0) h = std::min(h, Rational(hs.offset / hs.normal[i]));
        if (hs.normal[i] < 0) l = std::max(l, Rational(hs.offset / hs.normal[i]));
      }
      for (const auto& hs : halfspaces_) {
        bool zero = true;
        for (const auto& q : hs.normal) zero = zero && q == 0;
        if (zero && hs.offset < 0) h = l - 1;
      }
      v *= h > l ? to_double(h - l) : 0.0;
    }
    return {v, 0, VolumeEstimate::Method::box, 0};
  }
  return volume_monte_carlo(seed, samples);
}

// {(a, d) : 1 <= a <= a + (k-1) d <= N}, bbox [0, N]^2.
inline ConvexBody ap_body(int k, std::int64_t N) {
  if (k < 2) throw DomainError("ap_body needs k >= 2");
  if (N < 2) throw DomainError("ap_body needs N >= 2");
  std::vector<Halfspace> hs;
  hs.push_back({{Rational(-1), Rational(0)}, Rational(-1)});
  hs.push_back({{Rational(0), Rational(-1)}, Rational(0)});
  hs.push_back({{Rational(1), Rational(k - 1)}, Rational(N)});
  return ConvexBody(std::move(hs), {0, 0}, {N, N});
}

// [lo, hi]^d as a body (halfspaces duplicate the bbox).
inline ConvexBody box_body(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) {
  std::vector<Halfspace> hs;
  int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i) {
    Halfspace h;
    h.normal.assign(d, Rational(0));
    h.normal[i] = 1;
    h.offset = hi[i];
    hs.push_back(h);
    h.normal[i] = -1;
    h.offset = -lo[i];
    hs.push_back(h);
  }
  return ConvexBody(std::move(hs), lo, hi);
}

// ---------------------------------------------------------------------------
// Text format: one constraint per row, "c1 ... cd <= b" (">=" is also
// accepted and negated), entries integers or p/q. The bbox row is
// "lo1 hi1 ... lod hid".

inline Rational parse_rational(const std::string& tok) {
  try {
    auto slash = tok.find('/');
    if (slash == std::string::npos) {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw ConfigError("");
      return Rational(v);
    }
    std::size_t u1 = 0, u2 = 0;
    std::string ns = tok.substr(0, slash), ds = tok.substr(slash + 1);
    long long n = std::stoll(ns, &u1), d = std::stoll(ds, &u2);
    if (u1 != ns.size() || u2 != ds.size() || d == 0) throw ConfigError("");
    return make_rational(n, d);
  } catch (const std::exception&) {
    throw ConfigError("'" + tok + "' is not an integer or rational");
  }
}

inline Halfspace parse_halfspace_row(const std::string& row) {
  std::istringstream in(row);
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(t);
  auto it = std::find_if(toks.begin(), toks.end(), [](const std::string& t) { return t == "<=" || t == ">="; });
  if (it == toks.end() || it + 2 != toks.end() || it == toks.begin())
    throw ConfigError("constraint row '" + row + "' must look like 'c1 ... cd <= b'");
  bool flip = *it == ">=";
  Halfspace h;
  for (auto t = toks.begin(); t != it; ++t) h.normal.push_back(parse_rational(*t));
  h.offset = parse_rational(*(it + 1));
  if (flip) {
    for (auto& q : h.normal) q = -q;
    h.offset = -h.offset;
  }
  return h;
}

inline std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> parse_bbox_row(const std::string& row) {
  std::istringstream in(row);
  std::vector<std::int64_t> vals;
  for (std::string t; in >> t;) {
    Rational q = parse_rational(t);
    if (boost::multiprecision::denominator(q) != 1) throw ConfigError("bbox entries must be integers: '" + row + "'");
    vals.push_back(boost::multiprecision::numerator(q).convert_to<std::int64_t>());
  }
  if (vals.empty() || vals.size() % 2) throw ConfigError("bbox row needs pairs 'lo hi': '" + row + "'");
  std::vector<std::int64_t> lo, hi;
  for (std::size_t i = 0; i < vals.size(); i += 2) {
    lo.push_back(vals[i]);
    hi.push_back(vals[i + 1]);
  }
  return {lo, hi};
}

}  // namespace qfp
