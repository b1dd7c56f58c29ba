#pragma once

// Run configuration: an INI-style file with [system], [roles], [body] and
// [params] sections, overridden by command-line flags, echoed into reports.
//
//   [system]
//   dimension = 2
//   forms = 1 0 0 | 1 1 0 | 1 2 0 | 0 1 0     (coefficients, then constant)
//   [roles]
//   roles = vm | vm | vm | qform 1 0 1        (vm, tau, qform a b c)
//   [body]
//   lo = 1 0
//   hi = 100000 50000
//   halfspaces = 1 2 100000                   (normal, then offset: n·x <= c)
//   [params]
//   N = 100000

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/convex.hpp"
#include "qfp/errors.hpp"
#include "qfp/linsys.hpp"
#include "qfp/localfac.hpp"
#include "qfp/roles.hpp"
#include "qfp/wtrick.hpp"

namespace qfp::cli {

using nlohmann::ordered_json;

struct SpecConfig {
  int dimension = 0;
  std::vector<AffineForm> forms;
  std::vector<Role> roles;
  std::vector<std::int64_t> lo, hi;
  std::vector<Halfspace> halfspaces;
  bool allow_infinite = false;
};

struct RunConfig {
  std::string command;
  std::optional<SpecConfig> spec;
  std::optional<int> ap_k;

  std::int64_t N = 1'000'000;
  unsigned w = 2;
  unsigned gamma_exp = 3;
  std::int64_t C1 = 20;
  std::optional<std::int64_t> iota_threshold, eta_threshold;
  std::uint64_t p_max = 1000;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1'000'000;
  unsigned jobs = 1;
  unsigned extra_depth = 3;
  std::string variant = "raw";

  // beta-p / alpha
  std::uint64_t p = 0;
  unsigned max_depth = 0;  // 0: threshold + extra_depth
  std::vector<std::uint64_t> moduli;
  // gowers
  unsigned k = 2;
  std::vector<std::uint64_t> Ns{128, 256, 512};
  std::string function = "tricked-rep";
  bool cyclic = false;
  std::vector<std::int64_t> form{1, 0, 1};
  std::uint64_t b = 1;
  // majorant-audit
  std::uint64_t sample = 100'000;
  std::uint64_t matt_sample = 10'000;
  // balog
  int d = 2;

  TrickParams trick() const {
    TrickParams t;
    t.N = static_cast<double>(N);
    t.w = w;
    t.C1 = static_cast<double>(C1);
    t.gamma_exp = gamma_exp;
    if (iota_threshold) t.iota_threshold = static_cast<double>(*iota_threshold);
    if (eta_threshold) t.eta_threshold = static_cast<double>(*eta_threshold);
    t.validate();
    return t;
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::int64_t parse_int(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + tok + "' is not an integer");
  }
  if (used != tok.size()) throw ConfigError(where + ": '" + tok + "' is not an integer");
  return v;
}

inline Rational parse_rational(const std::string& tok, const std::string& where) {
  auto slash = tok.find('/');
  if (slash == std::string::npos) return Rational(parse_int(tok, where));
  auto den = parse_int(tok.substr(slash + 1), where);
  if (den == 0) throw ConfigError(where + ": zero denominator in '" + tok + "'");
  return Rational(parse_int(tok.substr(0, slash), where), den);
}

inline std::vector<std::int64_t> int_list(const std::string& s, const std::string& where) {
  std::vector<std::int64_t> out;
  for (const auto& w : words(s)) out.push_back(parse_int(w, where));
  return out;
}

inline Role parse_role(const std::string& s, const std::string& where) {
  auto w = words(s);
  if (w.empty()) throw ConfigError(where + ": empty role");
  if (w[0] == "vm" && w.size() == 1) return Role::von_mangoldt();
  if (w[0] == "tau" && w.size() == 1) return Role::divisor();
  if (w[0] == "qform" && w.size() == 4)
    return Role::qform(PDBQF(parse_int(w[1], where), parse_int(w[2], where), parse_int(w[3], where)));
  throw ConfigError(where + ": expected 'vm', 'tau' or 'qform a b c', got '" + s + "'");
}

}  // namespace detail

inline std::vector<AffineForm> parse_forms(const std::string& s, int d) {
  std::vector<AffineForm> out;
  auto rows = detail::split(s, '|');
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string where = "[system] forms row " + std::to_string(i + 1);
    auto v = detail::int_list(rows[i], where);
    if (static_cast<int>(v.size()) != d + 1)
      throw ConfigError(where + ": expected " + std::to_string(d + 1) + " integers (" + std::to_string(d) +
                        " coefficients and a constant), got " + std::to_string(v.size()));
    out.push_back({std::vector<std::int64_t>(v.begin(), v.end() - 1), v.back()});
  }
  return out;
}

inline std::vector<Halfspace> parse_halfspaces(const std::string& s, int d) {
  std::vector<Halfspace> out;
  auto rows = detail::split(s, '|');
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string where = "[body] halfspaces row " + std::to_string(i + 1);
    auto w = detail::words(rows[i]);
    if (w.empty()) continue;
    if (static_cast<int>(w.size()) != d + 1)
      throw ConfigError(where + ": expected " + std::to_string(d + 1) + " numbers, got " + std::to_string(w.size()));
    Halfspace h;
    for (int c = 0; c < d; ++c) h.normal.push_back(detail::parse_rational(w[c], where));
    h.offset = detail::parse_rational(w[d], where);
    out.push_back(h);
  }
  return out;
}

// The body's own halfspaces plus the bounding box, so a bare box is valid.
inline ConvexBody make_body(const SpecConfig& s) {
  auto hs = s.halfspaces;
  for (int i = 0; i < s.dimension; ++i) {
    Halfspace h;
    h.normal.assign(s.dimension, Rational(0));
    h.normal[i] = 1;
    h.offset = s.hi[i];
    hs.push_back(h);
    h.normal[i] = -1;
    h.offset = -s.lo[i];
    hs.push_back(h);
  }
  return ConvexBody(std::move(hs), s.lo, s.hi);
}

inline CorrelationSpec make_spec(const RunConfig& cfg) {
  if (cfg.ap_k) return ap_spec(*cfg.ap_k, cfg.N);
  if (!cfg.spec) throw ConfigError("this command needs a [system]/[roles]/[body] description or --ap-k");
  const auto& s = *cfg.spec;
  if (static_cast<int>(s.lo.size()) != s.dimension || static_cast<int>(s.hi.size()) != s.dimension)
    throw ConfigError("[body] needs lo and hi with " + std::to_string(s.dimension) + " entries each");
  return CorrelationSpec(AffineSystem(s.dimension, s.forms), s.roles, make_body(s), cfg.N, s.allow_infinite);
}

// Reads the file into `cfg`; keys missing from the file keep their defaults.
inline void load_config_file(const std::string& path, RunConfig& cfg) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  auto get = [&](const std::string& key) { return pt.get_optional<std::string>(key); };
  auto get_int = [&](const std::string& key) -> std::optional<std::int64_t> {
    if (auto v = get(key)) return detail::parse_int(*v, key);
    return std::nullopt;
  };

  if (auto sys = pt.get_child_optional("system")) {
    SpecConfig s;
    auto d = get_int("system.dimension");
    if (!d || *d < 1) throw ConfigError("[system] needs dimension >= 1");
    s.dimension = static_cast<int>(*d);
    auto forms = get("system.forms");
    if (!forms) throw ConfigError("[system] needs forms");
    s.forms = parse_forms(*forms, s.dimension);
    if (auto inf = get("system.allow_infinite_complexity")) s.allow_infinite = *inf == "true" || *inf == "1";
    if (auto roles = get("roles.roles")) {
      auto parts = detail::split(*roles, '|');
      for (std::size_t i = 0; i < parts.size(); ++i)
        s.roles.push_back(detail::parse_role(parts[i], "[roles] entry " + std::to_string(i + 1)));
    }
    if (auto lo = get("body.lo")) s.lo = detail::int_list(*lo, "[body] lo");
    if (auto hi = get("body.hi")) s.hi = detail::int_list(*hi, "[body] hi");
    if (auto hs = get("body.halfspaces")) s.halfspaces = parse_halfspaces(*hs, s.dimension);
    cfg.spec = s;
  }

  if (auto v = get_int("params.N")) cfg.N = *v;
  if (auto v = get_int("params.w")) cfg.w = static_cast<unsigned>(*v);
  if (auto v = get_int("params.gamma_exp")) cfg.gamma_exp = static_cast<unsigned>(*v);
  if (auto v = get_int("params.C1")) cfg.C1 = *v;
  if (auto v = get_int("params.iota_threshold")) cfg.iota_threshold = *v;
  if (auto v = get_int("params.eta_threshold")) cfg.eta_threshold = *v;
  if (auto v = get_int("params.p_max")) cfg.p_max = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.samples")) cfg.samples = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.jobs")) cfg.jobs = static_cast<unsigned>(*v);
  if (auto v = get_int("params.extra_depth")) cfg.extra_depth = static_cast<unsigned>(*v);
  if (auto v = get_int("params.ap_k")) cfg.ap_k = static_cast<int>(*v);
  if (auto v = get_int("params.p")) cfg.p = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.max_depth")) cfg.max_depth = static_cast<unsigned>(*v);
  if (auto v = get_int("params.k")) cfg.k = static_cast<unsigned>(*v);
  if (auto v = get_int("params.b")) cfg.b = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.d")) cfg.d = static_cast<int>(*v);
  if (auto v = get_int("params.sample")) cfg.sample = static_cast<std::uint64_t>(*v);
  if (auto v = get_int("params.matt_sample")) cfg.matt_sample = static_cast<std::uint64_t>(*v);
  if (auto v = get("params.variant")) cfg.variant = *v;
  if (auto v = get("params.function")) cfg.function = *v;
  if (auto v = get("params.cyclic")) cfg.cyclic = *v == "true" || *v == "1";
  if (auto v = get("params.moduli")) {
    cfg.moduli.clear();
    for (auto x : detail::int_list(*v, "[params] moduli")) cfg.moduli.push_back(static_cast<std::uint64_t>(x));
  }
  if (auto v = get("params.Ns")) {
    cfg.Ns.clear();
    for (auto x : detail::int_list(*v, "[params] Ns")) cfg.Ns.push_back(static_cast<std::uint64_t>(x));
  }
  if (auto v = get("params.form")) {
    cfg.form = detail::int_list(*v, "[params] form");
    if (cfg.form.size() != 3) throw ConfigError("[params] form needs three coefficients a b c");
  }
}

// ---------------------------------------------------------------------------
// JSON echo and replay

inline std::string rational_text(const Rational& r) { return to_string(r); }

inline ordered_json spec_to_json(const SpecConfig& s) {
  ordered_json j;
  j["dimension"] = s.dimension;
  j["forms"] = ordered_json::array();
  for (const auto& f : s.forms) {
    auto row = f.linear;
    row.push_back(f.constant);
    j["forms"].push_back(row);
  }
  j["roles"] = ordered_json::array();
  for (const auto& r : s.roles) j["roles"].push_back(to_string(r));
  j["lo"] = s.lo;
  j["hi"] = s.hi;
  j["halfspaces"] = ordered_json::array();
  for (const auto& h : s.halfspaces) {
    std::vector<std::string> row;
    for (const auto& c : h.normal) row.push_back(rational_text(c));
    row.push_back(rational_text(h.offset));
    j["halfspaces"].push_back(row);
  }
  j["allow_infinite_complexity"] = s.allow_infinite;
  return j;
}

inline SpecConfig spec_from_json(const ordered_json& j) {
  SpecConfig s;
  s.dimension = j.at("dimension").get<int>();
  for (const auto& row : j.at("forms")) {
    auto v = row.get<std::vector<std::int64_t>>();
    if (static_cast<int>(v.size()) != s.dimension + 1) throw ConfigError("replayed form has the wrong length");
    s.forms.push_back({std::vector<std::int64_t>(v.begin(), v.end() - 1), v.back()});
  }
  for (const auto& r : j.at("roles")) s.roles.push_back(detail::parse_role(r.get<std::string>(), "replayed role"));
  s.lo = j.at("lo").get<std::vector<std::int64_t>>();
  s.hi = j.at("hi").get<std::vector<std::int64_t>>();
  for (const auto& row : j.at("halfspaces")) {
    auto v = row.get<std::vector<std::string>>();
    Halfspace h;
    for (std::size_t c = 0; c + 1 < v.size(); ++c) h.normal.push_back(detail::parse_rational(v[c], "replayed halfspace"));
    h.offset = detail::parse_rational(v.back(), "replayed halfspace");
    s.halfspaces.push_back(h);
  }
  s.allow_infinite = j.value("allow_infinite_complexity", false);
  return s;
}

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// Every parameter with its effective value, defaults included.
inline ordered_json params_to_json(const RunConfig& c) {
  ordered_json j;
  j["N"] = c.N;
  j["w"] = c.w;
  j["gamma_exp"] = c.gamma_exp;
  j["gamma"] = "1/" + std::to_string(1ull << c.gamma_exp);
  j["C1"] = c.C1;
  j["iota_threshold"] = opt_json(c.iota_threshold);
  j["eta_threshold"] = opt_json(c.eta_threshold);
  j["p_max"] = c.p_max;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["jobs"] = c.jobs;
  j["extra_depth"] = c.extra_depth;
  j["variant"] = c.variant;
  j["ap_k"] = opt_json(c.ap_k);
  j["p"] = c.p;
  j["max_depth"] = c.max_depth;
  j["moduli"] = c.moduli;
  j["k"] = c.k;
  j["Ns"] = c.Ns;
  j["function"] = c.function;
  j["cyclic"] = c.cyclic;
  j["form"] = c.form;
  j["b"] = c.b;
  j["sample"] = c.sample;
  j["matt_sample"] = c.matt_sample;
  j["d"] = c.d;
  j["spec"] = c.spec ? spec_to_json(*c.spec) : ordered_json(nullptr);
  return j;
}

inline RunConfig params_from_json(const std::string& command, const ordered_json& j) {
  RunConfig c;
  c.command = command;
  c.N = j.at("N").get<std::int64_t>();
  c.w = j.at("w").get<unsigned>();
  c.gamma_exp = j.at("gamma_exp").get<unsigned>();
  c.C1 = j.at("C1").get<std::int64_t>();
  if (!j.at("iota_threshold").is_null()) c.iota_threshold = j["iota_threshold"].get<std::int64_t>();
  if (!j.at("eta_threshold").is_null()) c.eta_threshold = j["eta_threshold"].get<std::int64_t>();
  c.p_max = j.at("p_max").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.samples = j.at("samples").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<unsigned>();
  c.extra_depth = j.at("extra_depth").get<unsigned>();
  c.variant = j.at("variant").get<std::string>();
  if (!j.at("ap_k").is_null()) c.ap_k = j["ap_k"].get<int>();
  c.p = j.at("p").get<std::uint64_t>();
  c.max_depth = j.at("max_depth").get<unsigned>();
  c.moduli = j.at("moduli").get<std::vector<std::uint64_t>>();
  c.k = j.at("k").get<unsigned>();
  c.Ns = j.at("Ns").get<std::vector<std::uint64_t>>();
  c.function = j.at("function").get<std::string>();
  c.cyclic = j.at("cyclic").get<bool>();
  c.form = j.at("form").get<std::vector<std::int64_t>>();
  c.b = j.at("b").get<std::uint64_t>();
  c.sample = j.at("sample").get<std::uint64_t>();
  c.matt_sample = j.at("matt_sample").get<std::uint64_t>();
  c.d = j.at("d").get<int>();
  if (!j.at("spec").is_null()) c.spec = spec_from_json(j["spec"]);
  return c;
}

}  // namespace qfp::cli
