#include "skfi/variational.hpp"

#include <algorithm>
#include <cmath>

#include "skfi/errors.hpp"

namespace skfi {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

struct Candidate {
  double mu;
  double value;
};

// Golden-section maximization on [a, b]; returns the best point seen.
Candidate golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? Candidate{c, fc} : Candidate{d, fd};
}

std::vector<double> linspace(double lo, double hi, double step) {
  const auto n = static_cast<long>(std::ceil((hi - lo) / step - 1e-9));
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i < n; ++i) xs.push_back(lo + static_cast<double>(i) * step);
  xs.push_back(hi);
  return xs;
}

std::vector<double> evaluate_all(const std::function<double(double)>& f,
                                 const std::vector<double>& xs) {
  std::vector<double> ys(xs.size());
  const long n = static_cast<long>(xs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) ys[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
  return ys;
}

// Best point of a grid scan of [lo, hi] followed by golden refinement in the
// neighbouring bracket.
Candidate refine(const std::function<double(double)>& f, double lo, double hi,
                 const ArgmaxSettings& s) {
  const std::vector<double> xs = linspace(lo, hi, s.fine_step);
  const std::vector<double> ys = evaluate_all(f, xs);
  const auto j = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
  const double a = xs[j == 0 ? 0 : j - 1];
  const double b = xs[std::min(j + 1, xs.size() - 1)];
  Candidate best{xs[j], ys[j]};
  if (b - a > s.refine_tol) {
    const Candidate g = golden_max(f, a, b, s.refine_tol);
    if (g.value > best.value) best = g;
  }
  return best;
}

}  // namespace

std::string to_string(ArgmaxClass c) {
  switch (c) {
    case ArgmaxClass::unique: return "unique";
    case ArgmaxClass::symmetric_pair: return "symmetric-pair";
    case ArgmaxClass::degenerate_beta_zero: return "degenerate-beta-zero";
    case ArgmaxClass::ambiguous: return "ambiguous";
  }
  return "ambiguous";
}

nlohmann::json to_json(const ArgmaxReport& r) {
  return {{"value", r.value},
          {"maximizers", r.maximizers},
          {"classification", to_string(r.classification)},
          {"tol", r.tol}};
}

double skfi_objective(double mu, const TemperaturePoint& temp, const GaussianField& h, int k_max) {
  if (!(std::abs(mu) <= 1.0)) throw DomainError("skfi_objective: mu must lie in [-1, 1]");
  // With a centered field the objective is even; evaluating at |mu| makes
  // that exact instead of exact up to minimizer noise.
  const double m = h.centered() ? std::abs(mu) : mu;
  return sk_free_energy(temp.xi, temp.beta * m, h, k_max) - 0.5 * temp.beta * m * m;
}

ArgmaxClass classify_maximizers(const std::vector<double>& maximizers, double beta, double tol) {
  if (beta == 0.0) return ArgmaxClass::degenerate_beta_zero;
  if (maximizers.empty()) throw EvaluationError("classify_maximizers: empty maximizer set");
  if (maximizers.size() == 1) return ArgmaxClass::unique;
  if (maximizers.size() == 2 && maximizers[0] < 0.0 &&
      std::abs(maximizers[0] + maximizers[1]) <= tol) {
    return ArgmaxClass::symmetric_pair;
  }
  return ArgmaxClass::ambiguous;
}

ArgmaxReport argmax_scan(const std::function<double(double)>& objective, bool even, double beta,
                         const ArgmaxSettings& s) {
  if (!(s.coarse_step > 0.0 && s.fine_step > 0.0 && s.refine_tol > 0.0 && s.tol >= 0.0)) {
    throw ConfigError("argmax_scan: steps and tolerances must be positive");
  }
  ArgmaxReport report;
  report.tol = s.tol;
  if (beta == 0.0) {
    // Constant in mu: Omega is all of [-1, 1]; 0 stands in for it.
    report.value = objective(0.0);
    report.maximizers = {0.0};
    report.classification = ArgmaxClass::degenerate_beta_zero;
    return report;
  }

  const double lo = even ? 0.0 : -1.0;
  const std::vector<double> xs = linspace(lo, 1.0, s.coarse_step);
  const std::vector<double> ys = evaluate_all(objective, xs);
  const double coarse_max = *std::max_element(ys.begin(), ys.end());

  // Grid-local maxima that could hide the global maximum between grid points.
  // Runs of adjacent candidates (plateaus) share one refinement bracket.
  const double slack = 1e-3 + s.tol;
  const std::size_t n = xs.size();
  std::vector<Candidate> refined;
  std::size_t i = 0;
  while (i < n) {
    const bool left_ok = i == 0 || ys[i] >= ys[i - 1];
    const bool right_ok = i + 1 == n || ys[i] >= ys[i + 1];
    if (!(left_ok && right_ok && ys[i] >= coarse_max - slack)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
    const double a = xs[i == 0 ? 0 : i - 1];
    const double b = xs[std::min(j + 1, n - 1)];
    refined.push_back(refine(objective, a, b, s));
    i = j + 1;
  }

  double best = coarse_max;
  for (const Candidate& c : refined) best = std::max(best, c.value);
  report.value = best;

  std::vector<Candidate> near;
  for (const Candidate& c : refined) {
    if (c.value >= best - s.tol) {
      near.push_back(c);
      if (even && c.mu > s.merge_radius) near.push_back({-c.mu, c.value});
    }
  }
  std::sort(near.begin(), near.end(),
            [](const Candidate& a, const Candidate& b) { return a.mu < b.mu; });

  // Cluster within the merge radius, keeping each cluster's best point.
  std::vector<Candidate> clusters;
  for (const Candidate& c : near) {
    if (!clusters.empty() && c.mu - clusters.back().mu <= s.merge_radius) {
      if (c.value > clusters.back().value) clusters.back() = c;
    } else {
      clusters.push_back(c);
    }
  }
  for (const Candidate& c : clusters) report.maximizers.push_back(c.mu);
  if (even && report.maximizers.size() == 2) {
    // Reflection is exact; keep the pair bit-for-bit symmetric.
    report.maximizers[0] = -report.maximizers[1];
  }
  report.classification = classify_maximizers(report.maximizers, beta, s.merge_radius);
  return report;
}

ArgmaxReport skfi_free_energy(const TemperaturePoint& temp, const GaussianField& h,
                              const ArgmaxSettings& settings) {
  const int k_max = settings.k_max;
  auto f = [&](double mu) { return skfi_objective(mu, temp, h, k_max); };
  return argmax_scan(f, h.centered(), temp.beta, settings);
}

ArgmaxClass classify_Bd(const TemperaturePoint& temp, const GaussianField& h,
                        const ArgmaxSettings& settings) {
  if (!(temp.beta > 0.0)) throw DomainError("classify_Bd: beta must be positive");
  return skfi_free_energy(temp, h, settings).classification;
}

PredictedLaw predicted_overlap_law(const TemperaturePoint& temp, const GaussianField& h,
                                   const ArgmaxReport& argmax, int k_max) {
  if (argmax.classification == ArgmaxClass::ambiguous) {
    throw DomainError("predicted_overlap_law: maximizer set is ambiguous");
  }
  if (argmax.maximizers.empty()) throw DomainError("predicted_overlap_law: no maximizer");
  PredictedLaw law;
  law.argmax = argmax;
  law.mu = argmax.classification == ArgmaxClass::symmetric_pair ? argmax.maximizers.back()
                                                                : argmax.maximizers.front();
  ParisiResult r = parisi_minimize(temp.xi, h.shifted(temp.beta * law.mu), k_max);
  law.measure = r.measure;
  law.diagnostics = r.diagnostics;
  law.identifiable = r.diagnostics.identifiable;
  return law;
}

PredictedLaw predicted_overlap_law(const TemperaturePoint& temp, const GaussianField& h,
                                   const ArgmaxSettings& settings) {
  return predicted_overlap_law(temp, h, skfi_free_energy(temp, h, settings), settings.k_max);
}

MagnetizationOverlapBound magnetization_overlap_bound_check(const TemperaturePoint& temp,
                                                            const GaussianField& h,
                                                            const ArgmaxSettings& settings) {
  const PredictedLaw law = predicted_overlap_law(temp, h, settings);
  MagnetizationOverlapBound out;
  out.mu_squared = law.mu * law.mu;
  out.c = overlap_support_min(law.measure);
  out.checked = law.identifiable;
  out.holds = !out.checked || out.mu_squared <= out.c + 1e-6;
  return out;
}

double skfi_beta_derivative_fd(const TemperaturePoint& temp, const GaussianField& h, double eps,
                               const ArgmaxSettings& settings) {
  if (!(eps > 0.0) || temp.beta - eps < 0.0) {
    throw DomainError("skfi_beta_derivative_fd: need 0 < eps <= beta");
  }
  const TemperaturePoint up(temp.beta + eps, temp.xi);
  const TemperaturePoint down(temp.beta - eps, temp.xi);
  return (skfi_free_energy(up, h, settings).value - skfi_free_energy(down, h, settings).value) /
         (2.0 * eps);
}

double skfi_beta_p_derivative_fd(const TemperaturePoint& temp, const GaussianField& h, int p,
                                 double eps, const ArgmaxSettings& settings) {
  if (p < 1) throw DomainError("skfi_beta_p_derivative_fd: p must be >= 1");
  if (!(eps > 0.0)) throw DomainError("skfi_beta_p_derivative_fd: eps must be positive");
  const double bp = temp.xi.coeff(p);
  const TemperaturePoint up(temp.beta, temp.xi.with_coeff(p, bp + eps));
  const TemperaturePoint down(temp.beta, temp.xi.with_coeff(p, bp - eps));
  return (skfi_free_energy(up, h, settings).value - skfi_free_energy(down, h, settings).value) /
         (2.0 * eps);
}

double skfi_beta_p_derivative_formula(const TemperaturePoint& temp, const GaussianField& h, int p,
                                      const ArgmaxSettings& settings) {
  if (p < 1) throw DomainError("skfi_beta_p_derivative_formula: p must be >= 1");
  const double bp = temp.xi.coeff(p);
  if (bp == 0.0) return 0.0;
  const PredictedLaw law = predicted_overlap_law(temp, h, settings);
  return bp * (1.0 - parisi_moment(law.measure, p));
}

}  // namespace skfi
