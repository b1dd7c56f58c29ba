#pragma once

// Report emission: JSON {command, params, results, provenance}, an aligned
// text table, or CSV.

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfp/correlate.hpp"
#include "qfp/localfac.hpp"

#ifndef QFP_VERSION
#define QFP_VERSION "0.0.0"
#endif

namespace qfp::cli {

using nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Format { json, text, csv };

// Integers that fit in 64 bits are JSON numbers, larger ones strings.
inline ordered_json bigint_json(const BigInt& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return static_cast<std::int64_t>(v);
  return v.str();
}

inline BigInt bigint_from_json(const ordered_json& j) {
  if (j.is_string()) return BigInt(j.get<std::string>());
  return BigInt(j.get<std::int64_t>());
}

inline ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline double double_from_json(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline ordered_json rational_json(const Rational& r) {
  ordered_json j;
  j["num"] = bigint_json(numerator(r));
  j["den"] = bigint_json(denominator(r));
  j["decimal"] = static_cast<double>(r);
  return j;
}

inline Rational rational_from_json(const ordered_json& j) {
  return Rational(bigint_from_json(j.at("num")), bigint_from_json(j.at("den")));
}

inline ordered_json to_json(const LocalFactorReport& r) {
  ordered_json j;
  j["p"] = r.p;
  j["value"] = rational_json(r.value);
  j["depth"] = r.depth;
  j["stabilized"] = r.stabilized;
  j["error_bound"] = finite_or_null(r.error_bound);
  return j;
}

inline LocalFactorReport local_factor_from_json(const ordered_json& j) {
  LocalFactorReport r;
  r.p = j.at("p").get<std::uint64_t>();
  r.value = rational_from_json(j.at("value"));
  r.depth = j.at("depth").get<unsigned>();
  r.stabilized = j.at("stabilized").get<bool>();
  r.error_bound = double_from_json(j.at("error_bound"));
  return r;
}

inline ordered_json to_json(const SingularProduct& s) {
  ordered_json j;
  j["exact"] = rational_json(s.exact);
  j["value"] = s.value;
  j["tail_halfwidth"] = finite_or_null(s.tail_halfwidth);
  j["fitted_c"] = finite_or_null(s.fitted_c);
  j["p_max"] = s.p_max;
  j["unstabilized"] = s.unstabilized;
  j["factors"] = ordered_json::array();
  for (const auto& f : s.factors) j["factors"].push_back(to_json(f));
  return j;
}

inline ordered_json to_json(const ComparisonReport& r) {
  ordered_json j;
  j["empirical"] = r.empirical;
  j["predicted"] = r.predicted;
  j["beta_infinity"] = r.beta_infinity;
  j["beta_infinity_error"] = r.beta_infinity_error;
  j["partial_product"] = r.partial_product;
  j["partial_product_exact"] = rational_json(r.partial_product_exact);
  j["tail_halfwidth"] = finite_or_null(r.tail_halfwidth);
  j["relative_error"] = r.relative_error ? ordered_json(*r.relative_error) : ordered_json(nullptr);
  j["unstabilized"] = r.unstabilized;
  j["finite_complexity"] = r.finite_complexity;
  j["N"] = r.N;
  j["variant"] = to_string(r.variant);
  j["w"] = r.w;
  j["gamma"] = r.gamma;
  j["C1"] = r.C1;
  j["p_max"] = r.p_max;
  j["seed"] = r.seed;
  j["volume_method"] = r.volume_method;
  return j;
}

inline ComparisonReport comparison_from_json(const ordered_json& j) {
  ComparisonReport r;
  r.empirical = j.at("empirical").get<double>();
  r.predicted = j.at("predicted").get<double>();
  r.beta_infinity = j.at("beta_infinity").get<double>();
  r.beta_infinity_error = j.at("beta_infinity_error").get<double>();
  r.partial_product = j.at("partial_product").get<double>();
  r.partial_product_exact = rational_from_json(j.at("partial_product_exact"));
  r.tail_halfwidth = double_from_json(j.at("tail_halfwidth"));
  if (!j.at("relative_error").is_null()) r.relative_error = j["relative_error"].get<double>();
  r.unstabilized = j.at("unstabilized").get<std::vector<std::uint64_t>>();
  r.finite_complexity = j.at("finite_complexity").get<bool>();
  r.N = j.at("N").get<std::int64_t>();
  r.variant = j.at("variant").get<std::string>() == "raw" ? Variant::raw : Variant::excluded;
  r.w = j.at("w").get<unsigned>();
  r.gamma = j.at("gamma").get<double>();
  r.C1 = j.at("C1").get<double>();
  r.p_max = j.at("p_max").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  // volume_method points at a static string; map it back
  for (auto m : {VolumeEstimate::Method::exact2d, VolumeEstimate::Method::box, VolumeEstimate::Method::montecarlo})
    if (j.at("volume_method").get<std::string>() == to_string(m)) r.volume_method = to_string(m);
  return r;
}

// Column-oriented series for trend commands.
struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<ordered_json>> rows;
};

struct Report {
  std::string command;
  ordered_json params = ordered_json::object();
  ordered_json results = ordered_json::object();
  std::optional<Series> series;
  std::uint64_t seed = 0;
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

inline ordered_json report_json(const Report& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = r.command;
  j["params"] = r.params;
  j["results"] = r.results;
  if (r.series) {
    ordered_json s;
    s["columns"] = r.series->columns;
    s["rows"] = r.series->rows;
    j["results"]["series"] = s;
  }
  j["provenance"] = {{"version", QFP_VERSION}, {"seed", r.seed}, {"timestamp", utc_timestamp()}};
  return j;
}

namespace detail {

inline std::string cell(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream out;
    out << std::setprecision(12) << v.get<double>();
    return out.str();
  }
  return v.dump();
}

// Leaves of a JSON object as (dotted.key, value) pairs; arrays of scalars
// stay on one line.
inline void flatten(const ordered_json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out.emplace_back(prefix, cell(j));
  }
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace detail

inline std::string emit_report(const Report& r, Format f) {
  if (f == Format::json) return report_json(r).dump(2) + "\n";
  std::ostringstream out;
  if (f == Format::csv) {
    if (r.series) {
      for (std::size_t i = 0; i < r.series->columns.size(); ++i) out << (i ? "," : "") << r.series->columns[i];
      out << "\n";
      for (const auto& row : r.series->rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_field(detail::cell(row[i]));
        out << "\n";
      }
    } else {
      std::vector<std::pair<std::string, std::string>> kv;
      detail::flatten(r.results, "", kv);
      out << "key,value\n";
      for (const auto& [k, v] : kv) out << detail::csv_field(k) << "," << detail::csv_field(v) << "\n";
    }
    return out.str();
  }
  // text
  std::vector<std::pair<std::string, std::string>> kv;
  detail::flatten(r.results, "", kv);
  std::size_t width = 0;
  for (const auto& [k, v] : kv) width = std::max(width, k.size());
  out << r.command << "\n";
  for (const auto& [k, v] : kv) out << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << "\n";
  if (r.series) {
    std::vector<std::size_t> w(r.series->columns.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = r.series->columns[i].size();
    for (const auto& row : r.series->rows)
      for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], detail::cell(row[i]).size());
    out << "\n ";
    for (std::size_t i = 0; i < w.size(); ++i) out << " " << std::right << std::setw(static_cast<int>(w[i])) << r.series->columns[i];
    out << "\n";
    for (const auto& row : r.series->rows) {
      out << " ";
      for (std::size_t i = 0; i < row.size(); ++i) out << " " << std::right << std::setw(static_cast<int>(w[i])) << detail::cell(row[i]);
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace qfp::cli
