// qfp: batch front end for correlation sums, local factors, majorant audits
// and Gowers norms. Exit codes: 0 ok, 1 unknown command, 2 configuration or
// domain error, 3 budget exceeded, 4 internal error.

#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include "CLI11.hpp"
#include "config.hpp"
#include "qfp/correlate.hpp"
#include "qfp/gowers.hpp"
#include "qfp/linsys.hpp"
#include "qfp/localfac.hpp"
#include "qfp/majorants.hpp"
#include "qfp/wtrick.hpp"
#include "report.hpp"

using namespace qfp;
using namespace qfp::cli;

namespace {

const std::vector<std::string> kCommands{"predict", "count",          "compare", "beta-p", "alpha",
                                         "gowers",  "majorant-audit", "ap-s2s",  "balog",  "lambda-r"};

std::string usage() {
  std::string s = "usage: qfp <command> [options]\n\ncommands:\n";
  for (const auto& c : kCommands) s += "  " + c + "\n";
  s += "\nrun 'qfp <command> --help' for the options of a command\n";
  return s;
}

// Flags as given on the command line; unset ones leave the config alone.
struct Flags {
  std::optional<std::string> config, replay, out;
  std::string format = "json";
  std::optional<std::int64_t> N, C1, iota_threshold, eta_threshold;
  std::optional<unsigned> w, gamma_exp, jobs, extra_depth, max_depth, k;
  std::optional<std::uint64_t> p_max, seed, samples, p, b, sample, matt_sample;
  std::optional<int> ap_k, d;
  std::optional<std::string> variant, function;
  std::optional<std::vector<std::uint64_t>> moduli, Ns;
  std::optional<std::vector<std::int64_t>> form;
  bool cyclic = false;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "configuration file");
  app->add_option("--replay", f.replay, "re-run with the parameters embedded in a JSON report");
  app->add_option("--out", f.out, "write the report here instead of stdout");
  app->add_option("--format", f.format, "json, text or csv")->check(CLI::IsMember({"json", "text", "csv"}));
  app->add_option("--N", f.N, "scale N");
  app->add_option("--w", f.w, "W-trick cut-off w");
  app->add_option("--gamma-exp", f.gamma_exp, "gamma = 2^-k");
  app->add_option("--C1", f.C1, "exceptional-set constant C1");
  app->add_option("--iota-threshold", f.iota_threshold, "replaces log^{C1+1} N in the iota rule");
  app->add_option("--eta-threshold", f.eta_threshold, "replaces log log N in the eta rule");
  app->add_option("--p-max", f.p_max, "largest prime in the singular product");
  app->add_option("--seed", f.seed, "seed for Monte Carlo volumes and random builders");
  app->add_option("--samples", f.samples, "Monte Carlo samples for volumes");
  app->add_option("--jobs", f.jobs, "worker threads");
  app->add_option("--extra-depth", f.extra_depth, "depth beyond the stabilization threshold");
  app->add_option("--variant", f.variant, "raw or excluded")->check(CLI::IsMember({"raw", "excluded"}));
  app->add_option("--ap-k", f.ap_k, "use the k-term progression spec");
  app->add_option("--p", f.p, "prime");
  app->add_option("--max-depth", f.max_depth, "largest depth m for beta-p");
  app->add_option("--moduli", f.moduli, "one modulus per form (alpha)");
  app->add_option("--k", f.k, "Gowers order, or progression length for ap-s2s");
  app->add_option("--Ns", f.Ns, "sizes for the Gowers trend");
  app->add_option("--function", f.function, "tricked-rep, tricked-vm, random-signs or indicator")
      ->check(CLI::IsMember({"tricked-rep", "tricked-vm", "random-signs", "indicator"}));
  app->add_flag("--cyclic", f.cyclic, "evaluate Gowers norms on Z/N");
  app->add_option("--form", f.form, "a b c of the quadratic form")->expected(3);
  app->add_option("--b", f.b, "residue class mod Wbar");
  app->add_option("--sample", f.sample, "prefix [1, L] for the GT audit");
  app->add_option("--matt-sample", f.matt_sample, "prefix [1, L] for the Matthiesen audit");
  app->add_option("--d", f.d, "dimension for balog");
}

template <class T>
void take(const std::optional<T>& from, T& to) {
  if (from) to = *from;
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig c;
  if (f.replay) {
    std::ifstream in(*f.replay);
    if (!in) throw ConfigError("cannot open " + *f.replay);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
      if (j.at("command").get<std::string>() != command)
        throw ConfigError("report was produced by '" + j["command"].get<std::string>() + "', not '" + command + "'");
      c = params_from_json(command, j.at("params"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot replay " + *f.replay + ": " + e.what());
    }
  }
  c.command = command;
  if (f.config) load_config_file(*f.config, c);
  take(f.N, c.N);
  take(f.w, c.w);
  take(f.gamma_exp, c.gamma_exp);
  take(f.C1, c.C1);
  if (f.iota_threshold) c.iota_threshold = f.iota_threshold;
  if (f.eta_threshold) c.eta_threshold = f.eta_threshold;
  take(f.p_max, c.p_max);
  take(f.seed, c.seed);
  take(f.samples, c.samples);
  take(f.jobs, c.jobs);
  take(f.extra_depth, c.extra_depth);
  take(f.variant, c.variant);
  if (f.ap_k) c.ap_k = f.ap_k;
  take(f.p, c.p);
  take(f.max_depth, c.max_depth);
  take(f.moduli, c.moduli);
  take(f.k, c.k);
  take(f.Ns, c.Ns);
  take(f.function, c.function);
  if (f.cyclic) c.cyclic = true;
  take(f.form, c.form);
  take(f.b, c.b);
  take(f.sample, c.sample);
  take(f.matt_sample, c.matt_sample);
  take(f.d, c.d);
  if (c.variant != "raw" && c.variant != "excluded") throw ConfigError("variant must be raw or excluded");
  return c;
}

CorrelationOptions correlation_options(const RunConfig& c) {
  CorrelationOptions o;
  o.variant = c.variant == "raw" ? Variant::raw : Variant::excluded;
  o.trick = c.trick();
  o.jobs = c.jobs;
  return o;
}

PDBQF config_form(const RunConfig& c) { return PDBQF(c.form[0], c.form[1], c.form[2]); }

// ---------------------------------------------------------------------------

void run_predict(const RunConfig& c, Report& r) {
  auto spec = make_spec(c);
  auto binf = beta_infinity(spec, c.seed, c.samples);
  auto sp = singular_product(spec, c.p_max, c.extra_depth, c.jobs);
  r.results["beta_infinity"] = {{"value", binf.value}, {"abs_error", binf.abs_error}, {"method", to_string(binf.method)}};
  r.results["singular_product"] = to_json(sp);
  r.results["predicted"] = binf.value * sp.value;
  r.results["finite_complexity"] = spec.finite;
}

void run_count(const RunConfig& c, Report& r) {
  auto spec = make_spec(c);
  r.results["sum"] = correlation_sum(spec, correlation_options(c));
  r.results["variant"] = c.variant;
  r.results["finite_complexity"] = spec.finite;
}

void run_compare(const RunConfig& c, Report& r) {
  auto spec = make_spec(c);
  CompareOptions o;
  o.correlation = correlation_options(c);
  o.p_max = c.p_max;
  o.extra_depth = c.extra_depth;
  o.seed = c.seed;
  o.samples = c.samples;
  r.results = to_json(compare(spec, o));
}

void run_beta_p(const RunConfig& c, Report& r) {
  if (c.p < 2 || !factorize_trial(c.p).is_prime()) throw DomainError("--p must be a prime, got " + std::to_string(c.p));
  auto spec = make_spec(c);
  unsigned max_m = c.max_depth ? c.max_depth : std::max(2u, stabilization_threshold(spec, c.p) + 1 + c.extra_depth);
  auto rep = beta_p_stabilized(spec, c.p, max_m);
  r.results = to_json(rep);
  r.results["max_depth"] = max_m;
  if (c.ap_k) {
    auto closed = beta_p_ap_closed_form(*c.ap_k, c.p);
    r.results["closed_form"] = rational_json(closed);
    r.results["matches_closed_form"] = closed == rep.value;
  }
}

void run_alpha(const RunConfig& c, Report& r) {
  if (!c.spec) throw ConfigError("alpha needs a [system] section");
  AffineSystem sys(c.spec->dimension, c.spec->forms);
  DensityQuery q(sys, c.moduli);
  auto a = alpha(q);
  r.results["alpha"] = rational_json(a);
  r.results["moduli"] = c.moduli;
}

std::function<SampledFunction(std::uint64_t)> gowers_builder(const RunConfig& c, std::string& description) {
  if (c.function == "indicator") {
    description = "1 on [N]";
    return [](std::uint64_t N) { return SampledFunction(std::vector<double>(N, 1.0)); };
  }
  if (c.function == "random-signs") {
    description = "independent signs, seeded by seed + N";
    return [seed = c.seed](std::uint64_t N) {
      std::mt19937_64 rng(seed + N);
      std::vector<double> v(N);
      for (auto& x : v) x = rng() & 1 ? 1.0 : -1.0;
      return SampledFunction(v);
    };
  }
  auto t = c.trick();
  auto m = trick_moduli(t);
  auto sieve = std::make_shared<SieveTable>(static_cast<std::uint64_t>(
      std::min<double>(static_cast<double>(m.Wbar) * static_cast<double>(*std::max_element(c.Ns.begin(), c.Ns.end()) + 1) + 1,
                       4e9)));
  if (c.function == "tricked-vm") {
    description = "tricked von Mangoldt minus 1";
    if (std::gcd(c.b, m.W) != 1) throw DomainError("b must be coprime to W");
    return [=](std::uint64_t N) {
      std::vector<double> v(N);
      for (std::uint64_t i = 0; i < N; ++i) v[i] = tricked_von_mangoldt(i + 1, c.b, m, t, sieve.get()) - 1;
      return SampledFunction(v);
    };
  }
  description = "tricked representation function minus 1";
  auto rep = std::make_shared<TrickedRep>(config_form(c), c.b, m, t);
  if (rep->rho() == 0) throw DomainError("rho_{f,b}(Wbar) = 0 for b = " + std::to_string(c.b));
  return [=](std::uint64_t N) {
    std::vector<double> v(N);
    for (std::uint64_t i = 0; i < N; ++i) v[i] = (*rep)(i + 1, nullptr, sieve.get()) - 1;
    return SampledFunction(v);
  };
}

void run_gowers(const RunConfig& c, Report& r) {
  if (c.Ns.empty()) throw ConfigError("gowers needs at least one N");
  if (c.k == 0) throw DomainError("Gowers order k must be positive");
  if (c.k > 3) throw BudgetError("Gowers order k = " + std::to_string(c.k) + " exceeds the brute-force limit 3");
  std::string description;
  auto builder = gowers_builder(c, description);
  Series s{{"N", "average", "norm", "negative"}, {}};
  for (auto N : c.Ns) {
    auto g = gowers_norm_detail(builder(N), c.k, c.cyclic, c.jobs);
    s.rows.push_back({N, g.average, g.norm, g.negative});
  }
  r.results["function"] = description;
  r.results["k"] = c.k;
  r.results["cyclic"] = c.cyclic;
  bool nonincreasing = true;
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    nonincreasing = nonincreasing && s.rows[i][2].get<double>() <= s.rows[i - 1][2].get<double>();
  r.results["nonincreasing"] = nonincreasing;
  r.series = s;
}

void run_majorant_audit(const RunConfig& c, Report& r) {
  MajorantParams mp(c.trick());
  const auto& m = mp.moduli;
  if (c.sample == 0 || c.sample > mp.N_prime) throw DomainError("sample must lie in [1, N'] with N' = " + std::to_string(mp.N_prime));
  const std::uint64_t L = c.sample, Lm = std::min(c.matt_sample, mp.N_prime);
  SieveTable sieve(m.Wbar * (std::max(L, Lm) + 1));
  const double bound = default_cutoff().normalization() / mp.gamma;
  Series s{{"majorant", "b", "mean_or_calibration", "max_ratio", "violations"}, {}};

  for (std::uint64_t b = 0; b < m.Wbar; ++b) {
    if (std::gcd(b, m.W) != 1) continue;
    std::vector<double> nu(L), ratio(L);
    parallel_for(L, c.jobs, [&](std::size_t i) {
      nu[i] = nu_gt(i + 1, b, mp, &sieve);
      double lp = tricked_von_mangoldt(i + 1, b, m, mp.trick, &sieve);
      ratio[i] = lp == 0 ? 0 : lp / (bound * nu[i]);
    });
    NeumaierSum mean;
    double worst = 0;
    std::uint64_t bad = 0;
    for (std::size_t i = 0; i < L; ++i) {
      mean += nu[i];
      worst = std::max(worst, ratio[i]);
      bad += ratio[i] > 1 + 1e-12;
    }
    s.rows.push_back({"gt", b, mean.value() / static_cast<double>(L), worst, bad});
  }

  auto f = config_form(c);
  for (std::uint64_t b = 0; b < m.Wbar; ++b) {
    bool ok = residue_rep_count(f, static_cast<std::int64_t>(b), m.Wbar) > 0;
    for (const auto& [p, e] : m.iota) ok = ok && b % ipow(p, e) != 0;
    if (!ok) continue;
    MattMajorant mm(f, b, mp);
    mm.calibrate(Lm, &sieve, c.jobs);
    TrickedRep rp(f, b, m, mp.trick);
    std::vector<double> ratio(Lm);
    std::vector<char> outside(Lm, 0);
    parallel_for(Lm, c.jobs, [&](std::size_t i) {
      double v = rp(i + 1, nullptr, &sieve), nu = mm(i + 1, &sieve);
      if (v > 0 && nu == 0) outside[i] = 1;
      ratio[i] = v == 0 ? 0 : v / nu;
    });
    double worst = 0;
    std::uint64_t bad = 0;
    for (std::size_t i = 0; i < Lm; ++i) {
      if (!outside[i]) worst = std::max(worst, ratio[i]);
      bad += outside[i];
    }
    s.rows.push_back({"matt", b, *mm.constant(), worst, bad});
  }
  r.results["Wbar"] = m.Wbar;
  r.results["N_prime"] = mp.N_prime;
  r.results["c_chi"] = default_cutoff().normalization();
  r.results["pointwise_bound"] = bound;
  r.results["form"] = c.form;
  r.series = s;
}

void run_ap_s2s(const RunConfig& c, Report& r) {
  int k = c.ap_k ? *c.ap_k : static_cast<int>(c.k);
  CompareOptions o;
  o.correlation = correlation_options(c);
  o.p_max = c.p_max;
  o.extra_depth = c.extra_depth;
  o.seed = c.seed;
  o.samples = c.samples;
  auto rep = compare(ap_spec(k, c.N), o);
  r.results["k"] = k;
  r.results["sum"] = rep.empirical;
  r.results["predicted"] = rep.predicted;
  r.results["ratio"] = rep.predicted != 0 ? ordered_json(rep.empirical / rep.predicted) : ordered_json(nullptr);
  r.results["comparison"] = to_json(rep);
}

void run_balog(const RunConfig& c, Report& r) {
  r.results["d"] = c.d;
  r.results["sum"] = balog_sum(c.d, c.N, c.jobs);
}

void run_lambda_r(const RunConfig& c, Report& r) {
  double s = lambda_r_sum(c.N, c.jobs);
  r.results["sum"] = s;
  r.results["ratio_to_4N"] = s / (4.0 * static_cast<double>(c.N));
}

void dispatch(const RunConfig& c, Report& r) {
  const auto& cmd = c.command;
  if (cmd == "predict") run_predict(c, r);
  else if (cmd == "count") run_count(c, r);
  else if (cmd == "compare") run_compare(c, r);
  else if (cmd == "beta-p") run_beta_p(c, r);
  else if (cmd == "alpha") run_alpha(c, r);
  else if (cmd == "gowers") run_gowers(c, r);
  else if (cmd == "majorant-audit") run_majorant_audit(c, r);
  else if (cmd == "ap-s2s") run_ap_s2s(c, r);
  else if (cmd == "balog") run_balog(c, r);
  else if (cmd == "lambda-r") run_lambda_r(c, r);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << usage();
    return 1;
  }
  std::string first = argv[1];
  if (first == "--help" || first == "-h") {
    std::cout << usage();
    return 0;
  }
  if (std::find(kCommands.begin(), kCommands.end(), first) == kCommands.end()) {
    std::cerr << "qfp: unknown command '" << first << "'\n\n" << usage();
    return 1;
  }

  CLI::App app{"quadratic-form prime patterns"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& c : kCommands) add_flags(app.add_subcommand(c, c), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "qfp: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = resolve(first, flags);
    Report r;
    r.command = first;
    r.seed = cfg.seed;
    dispatch(cfg, r);
    r.params = params_to_json(cfg);
    Format fmt = flags.format == "text" ? Format::text : flags.format == "csv" ? Format::csv : Format::json;
    std::string text = emit_report(r, fmt);
    if (flags.out) {
      std::ofstream out(*flags.out);
      if (!out) throw ConfigError("cannot write " + *flags.out);
      out << text;
    } else {
      std::cout << text;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "qfp: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "qfp: domain error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "qfp: budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "qfp: internal error: " << e.what() << "\n";
    return 4;
  }
}
