#include "skfi/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skfi/cw.hpp"
#include "skfi/errors.hpp"
#include "skfi/parisi.hpp"
#include "skfi/quadrature.hpp"
#include "skfi/rng.hpp"
#include "skfi/simulator.hpp"
#include "skfi/variational.hpp"

namespace skfi {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Replica tuples checked by every simulation run through this module.
std::atomic<std::int64_t> g_tuple_checks{0};
std::atomic<std::int64_t> g_tuple_violations{0};

std::mutex g_cache_mutex;
std::map<std::string, ArgmaxReport> g_argmax_cache;
std::map<std::string, SimulationResult> g_sim_cache;

std::string key_of(const TemperaturePoint& t, const GaussianField& h) {
  nlohmann::json j = {{"beta", t.beta}, {"coeffs", t.xi.coeffs()}, {"m", h.mean}, {"s", h.std}};
  return j.dump();
}

ArgmaxReport cached_free_energy(const TemperaturePoint& t, const GaussianField& h) {
  const std::string key = key_of(t, h);
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    const auto it = g_argmax_cache.find(key);
    if (it != g_argmax_cache.end()) return it->second;
  }
  ArgmaxReport r = skfi_free_energy(t, h);
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  return g_argmax_cache.emplace(key, std::move(r)).first->second;
}

SimulationResult cached_simulation(const SimulationParams& p) {
  const std::string key = to_json(p).dump();
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    const auto it = g_sim_cache.find(key);
    if (it != g_sim_cache.end()) return it->second;
  }
  SimulationResult r = estimate_observables(p);
  g_tuple_checks += r.inequality_checks;
  g_tuple_violations += r.inequality_violations;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  return g_sim_cache.emplace(key, std::move(r)).first->second;
}

long scaled(long base, double scale, long minimum) {
  return std::max(minimum, static_cast<long>(std::llround(static_cast<double>(base) * scale)));
}

void check(SuiteReport& r, const std::string& name, double value, double bound, bool pass) {
  r.checks.push_back({name, value, bound, pass});
}

// Closed form of the Parisi functional at a Dirac mass, with the field and the
// Gaussian smoothing integrated separately.
double one_atom_closed_form(const MixtureXi& xi, const GaussianField& h, double q) {
  const double d1 = xi.derivs(q).first;
  const double s = std::sqrt(d1);
  const double e = expect_gaussian(
      [&](double hv) { return expect_gaussian([&](double z) { return log_cosh(hv + s * z); }, 0.0, 1.0); },
      h.mean, h.std);
  return kLn2 + e + 0.5 * (xi.value(1.0) - xi.value(q) - (1.0 - q) * d1);
}

// Bisection for the positive root of tanh(beta mu) = mu (beta > 1).
double cw_root_zero_field(double beta) {
  double lo = 1e-12, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::tanh(beta * mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- individual suites --------------------------------------------------------

void suite_parisi_oracle(SuiteReport& r, const VerifyOptions&) {
  r.runtime_limit = 30.0;
  double worst_fast = 0.0, worst_grid = 0.0;
  for (const auto& coeffs : {std::vector<double>{0.7}, std::vector<double>{0.7, 0.3}}) {
    const MixtureXi xi(coeffs);
    for (double sd : {0.0, 0.3}) {
      const GaussianField h(0.0, sd);
      for (int k = 0; k <= 19; ++k) {
        const double q = 0.05 * k;
        const DiscreteMeasure nu = DiscreteMeasure::dirac(q);
        const double cf = one_atom_closed_form(xi, h, q);
        ParisiSettings s;
        worst_fast = std::max(worst_fast, std::abs(parisi_functional(xi, h, nu, s) - cf));
        s.method = ParisiMethod::grid;
        worst_grid = std::max(worst_grid, std::abs(parisi_functional(xi, h, nu, s) - cf));
      }
    }
  }
  check(r, "max_abs_error_fast", worst_fast, 1e-8, worst_fast <= 1e-8);
  check(r, "max_abs_error_grid", worst_grid, 1e-8, worst_grid <= 1e-8);
}

void suite_sk_high_temp(SuiteReport& r, const VerifyOptions&) {
  r.runtime_limit = 60.0;
  const MixtureXi xi({0.3});
  const ParisiResult pr = parisi_minimize(xi, GaussianField(0.0, 0.0), kDefaultKMax);
  const double target = kLn2 + 0.5 * 0.09;
  const double err = std::abs(pr.value - target);
  const double dist = measure_distance(pr.measure, DiscreteMeasure::dirac(0.0));
  r.measurements["value"] = pr.value;
  r.measurements["measure"] = to_json(pr.measure);
  check(r, "value_error", err, 1e-4, err <= 1e-4);
  check(r, "distance_to_dirac0", dist, 1e-3, dist <= 1e-3);
}

void suite_cw_oracle(SuiteReport& r, const VerifyOptions&) {
  r.runtime_limit = 1.0;
  const TemperaturePoint t(2.0, MixtureXi());
  const ArgmaxReport a = skfi_free_energy(t, GaussianField(0.0, 0.0));
  const double oracle = cw_root_zero_field(2.0);
  r.measurements["argmax"] = to_json(a);
  r.measurements["bisection_mu"] = oracle;
  const bool pair = a.classification == ArgmaxClass::symmetric_pair && a.maximizers.size() == 2;
  check(r, "symmetric_pair", pair ? 1.0 : 0.0, 1.0, pair);
  if (!pair) return;
  const double mu = a.maximizers[1];
  check(r, "mu_vs_0.9575", std::abs(mu - 0.9575), 1e-4, std::abs(mu - 0.9575) <= 1e-4);
  check(r, "mu_vs_bisection", std::abs(mu - oracle), 1e-4, std::abs(mu - oracle) <= 1e-4);
  const double cf = kLn2 + log_cosh(2.0 * mu) - mu * mu;
  check(r, "value_error", std::abs(a.value - cf), 1e-8, std::abs(a.value - cf) <= 1e-8);
}

void suite_sandwich(SuiteReport& r, const VerifyOptions&) {
  r.runtime_limit = 300.0;
  const TemperaturePoint t(2.0, MixtureXi({0.3}));
  const GaussianField h(0.0, 0.3);
  const double half_xi1 = 0.5 * t.xi.value(1.0);
  double worst_lower = -1e300, worst_upper = -1e300;
  for (int k = 0; k <= 20; ++k) {
    const double mu = 0.05 * k;
    const double f = skfi_objective(mu, t, h);
    const double cw = cw_curve(mu, t.beta, h);
    worst_lower = std::max(worst_lower, cw - f);
    worst_upper = std::max(worst_upper, f - cw - half_xi1);
  }
  check(r, "max(cw - objective)", worst_lower, 1e-6, worst_lower <= 1e-6);
  check(r, "max(objective - cw - xi(1)/2)", worst_upper, 1e-6, worst_upper <= 1e-6);
}

void suite_free_energy_trend(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 600.0;
  const TemperaturePoint t(1.5, MixtureXi({0.5}));
  const long nd = scaled(200, o.scale, 10);
  struct Variant {
    std::string name;
    GaussianField h;
  };
  for (const Variant& v : {Variant{"h0", GaussianField(0.0, 0.0)}, Variant{"h0.2", GaussianField(0.2, 0.0)}}) {
    const double f_inf = cached_free_energy(t, v.h).value;
    std::vector<double> gap, se;
    nlohmann::json rows = nlohmann::json::array();
    for (int n : {8, 10, 12, 14, 16}) {
      SimulationParams p;
      p.temp = t;
      p.h = v.h;
      p.n = n;
      p.n_disorder = static_cast<int>(nd);
      p.sweeps = 0;
      p.root_seed = o.seed;
      const SimulationResult res = estimate_observables(p);
      const double fn = res.acc.mean("exact_log_z_per_n");
      gap.push_back(std::abs(fn - f_inf));
      se.push_back(res.acc.stderr_of_mean("exact_log_z_per_n"));
      rows.push_back({{"n", n}, {"F_N", fn}, {"stderr", se.back()}, {"gap", gap.back()}});
    }
    r.measurements[v.name] = {{"F_inf", f_inf}, {"ladder", rows}};
    int tolerated = 0, hard = 0;
    for (std::size_t i = 0; i + 1 < gap.size(); ++i) {
      if (gap[i + 1] <= gap[i]) continue;
      if (gap[i + 1] - gap[i] <= std::hypot(se[i], se[i + 1])) {
        ++tolerated;
      } else {
        ++hard;
      }
    }
    const bool mono = hard == 0 && tolerated <= 1;
    check(r, v.name + ".inversions", tolerated + hard, 1.0, mono);
    check(r, v.name + ".gap_n16", gap.back(), 0.05, gap.back() <= 0.05);
  }
}

void suite_enumeration_vs_mc(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 600.0;
  SimulationParams p;
  p.temp = TemperaturePoint(1.0, MixtureXi({0.5}));
  p.h = GaussianField(0.0, 0.3);
  p.n = 10;
  p.n_disorder = static_cast<int>(scaled(100, o.scale, 5));
  p.n_replicas = 2;
  p.sweeps = scaled(100000, o.scale, 2000);
  p.burnin = 1000;
  p.root_seed = o.seed;
  p.cdf_bins = 0;
  p.mixing_diagnostic = false;
  const SimulationResult res = cached_simulation(p);
  int agree = 0;
  double worst_z = 0.0;
  for (const DisorderRecord& d : res.disorders) {
    bool ok = true;
    for (const auto& [mc, ex] : {std::pair<std::string, std::string>{"m", "exact_m"},
                                 {"m2", "exact_m2"},
                                 {"R2", "exact_R2"}}) {
      const double diff = std::abs(d.values.at(mc) - d.values.at(ex));
      const double se = d.stderrs.at(mc);
      const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : 1e300);
      worst_z = std::max(worst_z, z);
      if (diff > 3.0 * se) ok = false;
    }
    agree += ok ? 1 : 0;
  }
  const double need = std::ceil(0.95 * p.n_disorder);
  r.measurements["disorders"] = p.n_disorder;
  r.measurements["sweeps"] = p.sweeps;
  r.measurements["max_z"] = worst_z;
  check(r, "disorders_within_3se", agree, need, agree >= need);
}

void suite_derivative_identity(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 600.0;
  struct Config {
    std::string name;
    int n;
    MixtureXi xi;
    int p;
  };
  for (const Config& c : {Config{"p1", 10, MixtureXi({0.5}), 1}, Config{"p2", 8, MixtureXi({0.5, 0.3}), 2}}) {
    SimulationParams p;
    p.temp = TemperaturePoint(1.0, c.xi);
    p.h = GaussianField(0.0, 0.3);
    p.n = c.n;
    p.n_disorder = static_cast<int>(scaled(200, o.scale, 10));
    p.sweeps = 0;
    p.root_seed = o.seed;
    const DerivativeCheck d = finite_n_derivative_check(p, c.p, 1e-3);
    r.measurements[c.name] = {{"lhs", d.lhs}, {"rhs", d.rhs}, {"stderr", d.stderr}};
    const double diff = std::abs(d.lhs - d.rhs);
    check(r, c.name + ".|lhs-rhs|", diff, 3.0 * d.stderr, diff <= 3.0 * d.stderr);
  }
}

void suite_replica_inequality(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 60.0;
  const long tuples = scaled(1000000, o.scale, 1000);
  StreamRng rng(o.seed, {StreamPurpose::random_tuples, 0, 0});
  std::int64_t violations = 0;
  std::vector<SpinConfig> reps;
  for (long t = 0; t < tuples; ++t) {
    const int k = 1 + static_cast<int>(rng.below(5));
    const int n = 1 + static_cast<int>(rng.below(64));
    reps.assign(static_cast<std::size_t>(k), SpinConfig(static_cast<std::size_t>(n)));
    for (int l = 0; l < k; ++l) {
      const std::uint32_t mode = rng.below(4);
      if (l > 0 && mode == 0) {
        reps[l] = reps[rng.below(static_cast<std::uint32_t>(l))];  // equality cases
      } else if (l > 0 && mode == 1) {
        reps[l] = reps[rng.below(static_cast<std::uint32_t>(l))];
        for (int& v : reps[l]) v = -v;
      } else {
        std::uint64_t bits = 0;
        for (int i = 0; i < n; ++i) {
          if (i % 64 == 0) bits = rng.next_u64();
          reps[l][i] = (bits >> (i % 64)) & 1u ? 1 : -1;
        }
      }
    }
    if (!replica_inequality_check(reps)) ++violations;
  }

  // A short simulation so the suite also covers chain-produced tuples.
  SimulationParams p;
  p.temp = TemperaturePoint(1.0, MixtureXi({0.5}));
  p.h = GaussianField(0.0, 0.3);
  p.n = 12;
  p.n_disorder = 10;
  p.n_replicas = 5;
  p.sweeps = 2000;
  p.burnin = 100;
  p.root_seed = o.seed;
  p.exact = false;
  cached_simulation(p);

  const std::int64_t sim_checks = g_tuple_checks.load();
  const std::int64_t sim_violations = g_tuple_violations.load();
  r.measurements["random_tuples"] = tuples;
  r.measurements["simulation_tuples"] = sim_checks;
  check(r, "violations", static_cast<double>(violations + sim_violations), 0.0,
        violations + sim_violations == 0);
}

// Shared setup of the overlap-trend suites.
struct TrendRuns {
  double mu = 0.0;
  double c = 0.0;
  double c_prime = 0.0;
  SimulationResult small, large;
};

TrendRuns trend_runs(const VerifyOptions& o) {
  const TemperaturePoint t(1.0, MixtureXi({0.5}));
  const GaussianField h(0.0, 0.3);
  const ArgmaxReport a = cached_free_energy(t, h);
  const PredictedLaw law = predicted_overlap_law(t, h, a);
  TrendRuns tr;
  tr.mu = law.mu;
  tr.c = overlap_support_min(law.measure);
  tr.c_prime = 0.5 * tr.c;
  SimulationParams p;
  p.temp = t;
  p.h = h;
  p.n_disorder = static_cast<int>(scaled(200, o.scale, 10));
  p.n_replicas = 4;
  p.sweeps = scaled(20000, o.scale, 500);
  p.burnin = 1000;
  p.root_seed = o.seed;
  p.overlap_cuts = {tr.c_prime};
  p.exact = false;
  p.n = 8;
  tr.small = cached_simulation(p);
  p.n = 24;
  tr.large = cached_simulation(p);
  return tr;
}

void trend_rate_suite(SuiteReport& r, const VerifyOptions& o, const std::string& observable,
                      double limit) {
  r.runtime_limit = 1200.0;
  const TrendRuns tr = trend_runs(o);
  const std::string name = observable == "R_le" ? "R_le[" + [&] {
    std::ostringstream s;
    s << tr.c_prime;
    return s.str();
  }() + "]" : observable;
  const double r8 = tr.small.acc.mean(name);
  const double r24 = tr.large.acc.mean(name);
  r.measurements["c"] = tr.c;
  r.measurements["c_prime"] = tr.c_prime;
  r.measurements["mu"] = tr.mu;
  r.measurements["n8"] = {{"rate", r8}, {"stderr", tr.small.acc.stderr_of_mean(name)}};
  r.measurements["n24"] = {{"rate", r24}, {"stderr", tr.large.acc.stderr_of_mean(name)}};
  check(r, observable + ".decrease(n24-n8)", r24 - r8, 0.0, r24 < r8);
  check(r, observable + ".n24", r24, limit, r24 <= limit);
}

void suite_gg_trend(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 1200.0;
  const TrendRuns tr = trend_runs(o);
  const GgResidual& g8 = *tr.small.gg;
  const GgResidual& g24 = *tr.large.gg;
  r.measurements["n8"] = {{"residual", g8.residual}, {"stderr", g8.stderr}, {"per_member", g8.per_member}};
  r.measurements["n24"] = {{"residual", g24.residual}, {"stderr", g24.stderr}, {"per_member", g24.per_member}};
  r.measurements["members"] = g8.members;
  check(r, "residual.decrease(n24-n8)", g24.residual - g8.residual, 0.0, g24.residual < g8.residual);
  check(r, "residual.n24", g24.residual, 0.1, g24.residual <= 0.1);
}

void suite_magnetization_overlap(SuiteReport& r, const VerifyOptions& o) {
  trend_rate_suite(r, o, "mag_overlap_violation", 0.15);
  const TemperaturePoint t(1.0, MixtureXi({0.5}));
  const GaussianField h(0.0, 0.3);
  const PredictedLaw law = predicted_overlap_law(t, h, cached_free_energy(t, h));
  const double mu2 = law.mu * law.mu;
  const double c = overlap_support_min(law.measure);
  // Analytic counterpart; informational only.
  r.measurements["analytic"] = {{"mu_squared", mu2}, {"c", c}, {"holds", mu2 <= c + 1e-6},
                                {"identifiable", law.identifiable}};
}

struct RegionSetup {
  double u = 0.6;
  GaussianField h{0.0, 0.3};
  double beta_u = 0.0;
  TemperaturePoint temp;
  ArgmaxReport argmax;
};

RegionSetup region_setup() {
  RegionSetup s;
  s.beta_u = beta_for_magnetization(s.u, s.h);
  const double beta = s.beta_u + 0.5;
  const double du = delta_u(s.u, beta, s.h);
  s.temp = TemperaturePoint(beta, MixtureXi({std::sqrt(du)}));
  s.argmax = cached_free_energy(s.temp, s.h);
  return s;
}

void suite_region_thm(SuiteReport& r, const VerifyOptions&) {
  r.runtime_limit = 300.0;
  const RegionSetup s = region_setup();
  const FieldCondition fc = field_condition_report(s.h);
  r.measurements["beta_u"] = s.beta_u;
  r.measurements["beta"] = s.temp.beta;
  r.measurements["beta1"] = s.temp.xi.coeff(1);
  r.measurements["argmax"] = to_json(s.argmax);
  r.measurements["field_condition"] = {{"expectation", fc.expectation}, {"threshold", fc.threshold}};
  check(r, "field_condition", fc.expectation, fc.threshold, fc.holds);
  const bool inside = region_contains(s.u, s.temp, s.h);
  check(r, "region_contains", inside ? 1.0 : 0.0, 1.0, inside);
  double min_abs = 1.0;
  for (double m : s.argmax.maximizers) min_abs = std::min(min_abs, std::abs(m));
  check(r, "min|mu|", min_abs, s.u, min_abs > s.u);
}

void suite_magnetization_histogram(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 1200.0;
  const RegionSetup s = region_setup();
  const double mu = s.argmax.maximizers.back();
  SimulationParams p;
  p.temp = s.temp;
  p.h = s.h;
  p.n = 20;
  p.n_disorder = static_cast<int>(scaled(400, o.scale, 10));
  p.n_replicas = 2;
  p.sweeps = scaled(10000, o.scale, 500);
  p.burnin = 1000;
  p.root_seed = o.seed;
  p.mu_target = mu;
  p.mu_eps = 0.1;
  p.exact = false;
  p.cdf_bins = 0;
  const SimulationResult res = cached_simulation(p);
  std::vector<double> vals;
  for (const DisorderRecord& d : res.disorders) vals.push_back(d.values.at("mu_window"));
  const double mean = res.acc.mean("mu_window");
  const double extreme = static_cast<double>(std::count_if(vals.begin(), vals.end(), [](double v) {
                           return v <= 0.1 || v >= 0.9;
                         })) / static_cast<double>(vals.size());
  r.measurements["mu"] = mu;
  r.measurements["mean"] = mean;
  r.measurements["mixing_gap_m"] = res.acc.mean("mixing_gap_m");
  check(r, "random_field.|mean-0.5|", std::abs(mean - 0.5), 0.08, std::abs(mean - 0.5) <= 0.08);
  check(r, "random_field.extreme_fraction", extreme, 0.7, extreme >= 0.7);

  const GaussianField h0(0.0, 0.0);
  const ArgmaxReport a0 = cached_free_energy(s.temp, h0);
  const double mu0 = a0.maximizers.back();
  p.h = h0;
  p.mu_target = mu0;
  const SimulationResult res0 = cached_simulation(p);
  double worst = 0.0;
  for (const DisorderRecord& d : res0.disorders) worst = std::max(worst, std::abs(d.values.at("mu_window") - 0.5));
  r.measurements["zero_field"] = {{"mu", mu0}, {"mean", res0.acc.mean("mu_window")}, {"max_dev", worst}};
  check(r, "zero_field.max|v-0.5|", worst, 0.1, worst <= 0.1);
}

std::string simulation_csv(const SimulationParams& p) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  write_csv_rows(os, estimate_observables(p));
  return os.str();
}

void suite_manifest_replay(SuiteReport& r, const VerifyOptions& o) {
  r.runtime_limit = 60.0;
  SimulationParams p;
  p.temp = TemperaturePoint(1.0, MixtureXi({0.5, 0.2}));
  p.h = GaussianField(0.0, 0.3);
  p.n = 10;
  p.n_disorder = 8;
  p.n_replicas = 3;
  p.sweeps = 500;
  p.burnin = 100;
  p.root_seed = o.seed;
  p.mu_target = 0.5;
  p.windows = {{-0.2, 0.2}};
  p.overlap_cuts = {0.1};
  const std::string manifest = to_json(p).dump();
  const std::string first = simulation_csv(p);
  const SimulationParams replayed = simulation_params_from_json(nlohmann::json::parse(manifest));
  std::string second;
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  second = simulation_csv(replayed);
  omp_set_num_threads(saved);
#else
  second = simulation_csv(replayed);
#endif
  r.measurements["bytes"] = first.size();
  check(r, "csv_identical", first == second ? 1.0 : 0.0, 1.0, first == second);
  const std::string a1 = to_json(skfi_free_energy(TemperaturePoint(2.0, MixtureXi()), GaussianField(0.0, 0.3))).dump();
  const std::string a2 = to_json(skfi_free_energy(TemperaturePoint(2.0, MixtureXi()), GaussianField(0.0, 0.3))).dump();
  check(r, "argmax_json_identical", a1 == a2 ? 1.0 : 0.0, 1.0, a1 == a2);
}

using SuiteFn = std::function<void(SuiteReport&, const VerifyOptions&)>;

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"parisi-oracle", suite_parisi_oracle},
      {"sk-high-temp", suite_sk_high_temp},
      {"cw-oracle", suite_cw_oracle},
      {"sandwich", suite_sandwich},
      {"free-energy-trend", suite_free_energy_trend},
      {"enumeration-vs-mc", suite_enumeration_vs_mc},
      {"derivative-identity", suite_derivative_identity},
      {"replica-inequality", suite_replica_inequality},
      {"gg-trend", suite_gg_trend},
      {"positivity-trend", [](SuiteReport& r, const VerifyOptions& o) { trend_rate_suite(r, o, "R_le", 0.15); }},
      {"ultrametric-trend",
       [](SuiteReport& r, const VerifyOptions& o) { trend_rate_suite(r, o, "ultrametric_violation", 0.15); }},
      {"magnetization-overlap", suite_magnetization_overlap},
      {"region-thm", suite_region_thm},
      {"magnetization-histogram", suite_magnetization_histogram},
      {"manifest-replay", suite_manifest_replay},
  };
  return r;
}

}  // namespace

nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  }
  return {{"suite", r.suite},         {"pass", r.pass},     {"seconds", r.seconds},
          {"runtime_limit", r.runtime_limit}, {"checks", checks}, {"measurements", r.measurements}};
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& kv : registry()) out.push_back(kv.first);
    return out;
  }();
  return names;
}

SuiteReport run_suite(const std::string& name, const VerifyOptions& options) {
  if (!(options.scale > 0.0)) throw ConfigError("verify: scale must be positive");
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    SuiteReport r;
    r.suite = name;
    const auto t0 = std::chrono::steady_clock::now();
    fn(r, options);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](const CheckResult& c) { return c.pass; });
    const bool in_time = r.seconds <= r.runtime_limit;
    r.checks.push_back({"runtime_seconds", r.seconds, r.runtime_limit, in_time});
    r.pass = r.pass && in_time;
    return r;
  }
  std::string list;
  for (const std::string& n : suite_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown suite '" + name + "'; available: " + list);
}

}  // namespace skfi
