// skfi: command-line front end for the SK model with Curie-Weiss interaction.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "skfi/cw.hpp"
#include "skfi/errors.hpp"
#include "skfi/model.hpp"
#include "skfi/parisi.hpp"
#include "skfi/simulator.hpp"
#include "skfi/variational.hpp"
#include "skfi/verify.hpp"

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = 0;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json load_config(const Globals& g) {
  if (g.config_path.empty()) return json::object();
  std::ifstream in(g.config_path);
  if (!in) throw skfi::ConfigError("cannot open config '" + g.config_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw skfi::ConfigError(g.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw skfi::ConfigError(g.config_path + ": top level must be an object");
  // A run manifest replays its recorded config.
  if (j.contains("manifest_version")) j = j.at("config");
  if (j.contains("version")) {
    if (j.at("version") != kSchemaVersion) {
      throw skfi::ConfigError("config version " + j.at("version").dump() + " is not supported (expected " +
                              std::to_string(kSchemaVersion) + ")");
    }
    j.erase("version");
  }
  return j;
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& cmd) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      std::string list;
      for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
      throw skfi::ConfigError(cmd + ": unknown config key '" + item.key() + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw skfi::ConfigError("config field '" + key + "': " + e.what());
  }
}

skfi::ModelParams model_params(const json& j) {
  skfi::ModelParams m;
  json sub = json::object();
  for (const char* k : {"beta", "coeffs", "h_mean", "h_std"})
    if (j.contains(k)) sub[k] = j.at(k);
  return skfi::model_params_from_json(sub);
}

void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  const auto path = std::filesystem::path(g.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw skfi::ConfigError("cannot write '" + path.string() + "'");
  out << text;
  std::cerr << "wrote " << path.string() << '\n';
}

void emit_json(const Globals& g, const std::string& name, const json& j) { emit(g, name, j.dump(2) + "\n"); }

int cmd_cw(const Globals& g) {
  const json cfg = load_config(g);
  require_keys(cfg, {"beta", "coeffs", "h_mean", "h_std", "u"}, "cw");
  const skfi::ModelParams mp = model_params(cfg);
  const skfi::GaussianField& h = mp.field;
  skfi::require_centered(h, "cw");
  json report = {{"h_std", h.std}, {"alpha", skfi::alpha_critical(h)}};
  if (cfg.contains("beta")) {
    report["beta"] = mp.temp.beta;
    report["mu"] = skfi::cw_fixed_point(mp.temp.beta, h);
  }
  const skfi::FieldCondition fc = skfi::field_condition_report(h);
  report["field_condition"] = {{"expectation", fc.expectation}, {"threshold", fc.threshold}, {"holds", fc.holds}};
  if (cfg.contains("u")) {
    const double u = field(cfg, "u", 0.0);
    const double bu = skfi::beta_for_magnetization(u, h);
    report["u"] = u;
    report["beta_u"] = bu;
    if (cfg.contains("beta")) {
      if (mp.temp.beta >= bu) report["delta_u"] = skfi::delta_u(u, mp.temp.beta, h);
      report["region_contains"] = skfi::region_contains(u, mp.temp, h);
    }
  }
  emit_json(g, "cw.json", report);
  return 0;
}

skfi::MinimizeSettings minimize_settings(const json& cfg) {
  skfi::MinimizeSettings s;
  s.functional.order = field(cfg, "order", s.functional.order);
  s.functional.spacing = field(cfg, "spacing", s.functional.spacing);
  const std::string method = field(cfg, "method", std::string("fast"));
  if (method == "grid") {
    s.functional.method = skfi::ParisiMethod::grid;
  } else if (method != "fast") {
    throw skfi::ConfigError("config field 'method': expected fast or grid");
  }
  s.restarts = field(cfg, "restarts", s.restarts);
  return s;
}

int cmd_parisi(const Globals& g, bool one_atom_scan) {
  const json cfg = load_config(g);
  require_keys(cfg, {"coeffs", "h_mean", "h_std", "k_max", "order", "spacing", "method", "restarts", "seed", "scan_step"},
               "parisi");
  const skfi::ModelParams mp = model_params(cfg);
  skfi::MinimizeSettings s = minimize_settings(cfg);
  s.seed = g.seed.value_or(field<std::uint64_t>(cfg, "seed", s.seed));
  if (one_atom_scan) {
    const double step = field(cfg, "scan_step", 0.01);
    if (!(step > 0.0 && step <= 1.0)) throw skfi::ConfigError("config field 'scan_step' must lie in (0, 1]");
    std::ostringstream os;
    os << "q,P\n";
    const long n = std::lround(1.0 / step);
    os.precision(17);
    for (long k = 0; k <= n; ++k) {
      const double q = std::min(1.0, static_cast<double>(k) * step);
      os << q << ',' << skfi::parisi_functional(mp.temp.xi, mp.field, skfi::DiscreteMeasure::dirac(q), s.functional)
         << '\n';
    }
    emit(g, "one_atom_scan.csv", os.str());
    return 0;
  }
  const int k_max = field(cfg, "k_max", skfi::kDefaultKMax);
  const skfi::ParisiResult r = skfi::parisi_minimize(mp.temp.xi, mp.field, k_max, s);
  const auto& d = r.diagnostics;
  json report = {{"value", r.value},
                 {"measure", skfi::to_json(r.measure)},
                 {"diagnostics",
                  {{"half_width", d.half_width},
                   {"spacing", d.spacing},
                   {"order", d.order},
                   {"atoms_used", d.atoms_used},
                   {"k_reached", d.k_reached},
                   {"k_max", d.k_max},
                   {"level_values", d.level_values},
                   {"evaluations", d.evaluations},
                   {"restarts", d.restarts},
                   {"near_ties", d.near_ties},
                   {"identifiable", d.identifiable}}}};
  emit_json(g, "parisi.json", report);
  return 0;
}

skfi::ArgmaxSettings argmax_settings(const json& cfg) {
  skfi::ArgmaxSettings s;
  s.tol = field(cfg, "tol", s.tol);
  s.k_max = field(cfg, "k_max", s.k_max);
  return s;
}

int cmd_free_energy(const Globals& g) {
  const json cfg = load_config(g);
  require_keys(cfg, {"beta", "coeffs", "h_mean", "h_std", "tol", "k_max"}, "free-energy");
  const skfi::ModelParams mp = model_params(cfg);
  emit_json(g, "free_energy.json", skfi::to_json(skfi::skfi_free_energy(mp.temp, mp.field, argmax_settings(cfg))));
  return 0;
}

int cmd_region(const Globals& g) {
  const json cfg = load_config(g);
  require_keys(cfg, {"beta", "coeffs", "h_mean", "h_std", "u", "classify", "tol", "k_max"}, "region");
  if (!cfg.contains("u")) throw skfi::ConfigError("region: config field 'u' is required");
  const skfi::ModelParams mp = model_params(cfg);
  const double u = field(cfg, "u", 0.0);
  const skfi::RegionSpec spec = skfi::make_region(u, mp.field);
  json report = {{"u", u},
                 {"beta", mp.temp.beta},
                 {"beta_u", spec.beta_u},
                 {"xi1", mp.temp.xi.value(1.0)},
                 {"region_contains", skfi::region_contains(u, mp.temp, mp.field)},
                 {"field_condition", skfi::field_condition(mp.field)}};
  if (mp.temp.beta >= spec.beta_u) report["delta_u"] = skfi::delta_u(u, mp.temp.beta, mp.field);
  if (field(cfg, "classify", false)) {
    const skfi::ArgmaxReport a = skfi::skfi_free_energy(mp.temp, mp.field, argmax_settings(cfg));
    report["argmax"] = skfi::to_json(a);
    report["note"] = "classification is a tolerance-based numerical verdict";
  }
  emit_json(g, "region.json", report);
  return 0;
}

int cmd_simulate(const Globals& g) {
  json cfg = load_config(g);
  std::vector<int> ladder;
  if (cfg.contains("n_ladder")) {
    ladder = field(cfg, "n_ladder", std::vector<int>{});
    cfg.erase("n_ladder");
  }
  if (g.seed) cfg["seed"] = *g.seed;
  skfi::SimulationParams base = skfi::simulation_params_from_json(cfg);
  if (ladder.empty()) ladder = {base.n};
  for (int n : ladder) {
    skfi::SimulationParams p = base;
    p.n = n;
    try {
      skfi::validate(p);
    } catch (const skfi::ConfigError& e) {
      throw skfi::ConfigError(std::string(e.what()) + " (remove n = " + std::to_string(n) + " from n_ladder)");
    }
  }

  const std::string started = utc_now();
  std::ostringstream csv;
  csv << skfi::kCsvHeader << '\n';
  for (int n : ladder) {
    skfi::SimulationParams p = base;
    p.n = n;
    skfi::write_csv_rows(csv, skfi::estimate_observables(p));
  }
  json recorded = skfi::to_json(base);
  recorded["n_ladder"] = ladder;
  recorded["version"] = kSchemaVersion;
  const json manifest = {{"manifest_version", 1},
                         {"command", "simulate"},
                         {"config", recorded},
                         {"root_seed", base.root_seed},
                         {"code_version", SKFI_VERSION},
                         {"started", started},
                         {"finished", utc_now()}};
  Globals files = g;
  if (files.out_dir.empty()) files.out_dir = ".";
  emit(files, "simulate.csv", csv.str());
  emit_json(files, "manifest.json", manifest);
  return 0;
}

int cmd_enumerate(const Globals& g) {
  const json cfg = load_config(g);
  require_keys(cfg, {"beta", "coeffs", "h_mean", "h_std", "n", "seed", "index"}, "enumerate");
  const skfi::ModelParams mp = model_params(cfg);
  const int n = field(cfg, "n", 10);
  const std::uint64_t seed = g.seed.value_or(field<std::uint64_t>(cfg, "seed", 1));
  const auto index = field<std::uint32_t>(cfg, "index", 0);
  const skfi::DisorderSample d = skfi::sample_disorder(n, mp.temp.xi, mp.field, seed, index);
  const skfi::ExactResult r = skfi::enumerate_exact(d, mp.temp.beta);
  json report = {{"n", n},
                 {"seed", seed},
                 {"index", index},
                 {"log_z", r.log_z},
                 {"log_z_per_n", r.log_z / n},
                 {"mean_m", r.mean_m},
                 {"mean_m2", r.mean_m2},
                 {"mean_abs_m", r.mean_abs_m},
                 {"R2", r.r2},
                 {"R4", r.r4},
                 {"m_pmf", r.m_pmf},
                 {"overlap_pmf", r.overlap_pmf}};
  emit_json(g, "enumerate.json", report);
  return 0;
}

int cmd_verify(const Globals& g, std::vector<std::string> suites, double scale) {
  if (suites.empty()) throw skfi::ConfigError("verify: name at least one suite (or 'all')");
  if (suites.size() == 1 && suites[0] == "all") suites = skfi::suite_names();
  for (const std::string& s : suites) {
    if (std::find(skfi::suite_names().begin(), skfi::suite_names().end(), s) == skfi::suite_names().end()) {
      skfi::run_suite(s);  // throws with the list of suites
    }
  }
  skfi::VerifyOptions opts;
  if (g.seed) opts.seed = *g.seed;
  opts.scale = scale;
  json reports = json::array();
  bool all_pass = true;
  for (const std::string& s : suites) {
    const skfi::SuiteReport r = skfi::run_suite(s, opts);
    std::cerr << (r.pass ? "PASS " : "FAIL ") << s << " (" << r.seconds << " s)\n";
    all_pass = all_pass && r.pass;
    reports.push_back(skfi::to_json(r));
  }
  emit_json(g, "verify.json", reports);
  return all_pass ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SK spin glass with Curie-Weiss interaction: free energy, Parisi measures, simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (or a run manifest)");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Root seed (overrides the config)");
  app.add_option("--out", g.out_dir, "Output directory (default: stdout)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);

  auto* cw = app.add_subcommand("cw", "Curie-Weiss quantities: alpha, mu(beta), beta_u, delta_u, field condition");
  auto* parisi = app.add_subcommand("parisi", "Minimize the Parisi functional");
  bool one_atom_scan = false;
  parisi->add_flag("--one-atom-scan", one_atom_scan, "Emit q,P(delta_q) as CSV instead");
  auto* fe = app.add_subcommand("free-energy", "Variational free energy and its argmax set");
  auto* region = app.add_subcommand("region", "Region membership for a magnetization level u");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo over an N-ladder; CSV plus manifest");
  auto* verify = app.add_subcommand("verify", "Run named verification suites");
  std::vector<std::string> suites;
  double scale = 1.0;
  verify->add_option("suites", suites, "Suite names or 'all'");
  verify->add_option("--scale", scale, "Shrink disorder counts and sweeps (smoke runs)")->check(CLI::PositiveNumber);
  auto* enumerate = app.add_subcommand("enumerate", "Exact enumeration for one disorder sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) g.seed = seed;
#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (*cw) return cmd_cw(g);
    if (*parisi) return cmd_parisi(g, one_atom_scan);
    if (*fe) return cmd_free_energy(g);
    if (*region) return cmd_region(g);
    if (*simulate) return cmd_simulate(g);
    if (*verify) return cmd_verify(g, suites, scale);
    if (*enumerate) return cmd_enumerate(g);
  } catch (const skfi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const skfi::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
