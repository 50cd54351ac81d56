#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skfi/model.hpp"
#include "skfi/parisi.hpp"

namespace skfi {

enum class ArgmaxClass { unique, symmetric_pair, degenerate_beta_zero, ambiguous };

std::string to_string(ArgmaxClass c);

/// Numerical argmax set of mu -> F^SK(B, beta mu + h) - beta mu^2 / 2 on [-1,1].
struct ArgmaxReport {
  double value = 0.0;
  std::vector<double> maximizers;  // sorted
  ArgmaxClass classification = ArgmaxClass::ambiguous;
  double tol = 0.0;
};

nlohmann::json to_json(const ArgmaxReport& r);

struct ArgmaxSettings {
  double tol = 1e-6;            // value tolerance for membership in Omega
  double merge_radius = 1e-4;   // maximizers closer than this are one point
  double coarse_step = 1e-2;
  double fine_step = 1e-3;
  double refine_tol = 1e-10;
  int k_max = kDefaultKMax;
};

/// f(mu) = F^SK(B, beta mu + h) - beta mu^2 / 2.
double skfi_objective(double mu, const TemperaturePoint& temp, const GaussianField& h,
                      int k_max = kDefaultKMax);

/// Maximizes an arbitrary objective over [-1,1] ([0,1] reflected when
/// `even`) and classifies the maximizers. `beta` only selects the
/// degenerate-beta-zero verdict.
ArgmaxReport argmax_scan(const std::function<double(double)>& objective, bool even, double beta,
                         const ArgmaxSettings& settings = {});

/// Classifies an already clustered, sorted maximizer list.
ArgmaxClass classify_maximizers(const std::vector<double>& maximizers, double beta, double tol);

/// F(beta, B, h) = max_mu f(mu) with the argmax set and its classification.
ArgmaxReport skfi_free_energy(const TemperaturePoint& temp, const GaussianField& h,
                              const ArgmaxSettings& settings = {});

/// Numerical B_d verdict (unique or symmetric-pair). Tolerance-based, not a proof.
ArgmaxClass classify_Bd(const TemperaturePoint& temp, const GaussianField& h,
                        const ArgmaxSettings& settings = {});

struct PredictedLaw {
  DiscreteMeasure measure = DiscreteMeasure::dirac(0.0);
  double mu = 0.0;           // maximizer used for the shift beta mu
  bool identifiable = true;  // false when xi = 0
  ParisiDiagnostics diagnostics;
  ArgmaxReport argmax;
};

/// Parisi minimizer for the field beta mu + h at the (nonnegative) maximizer mu.
PredictedLaw predicted_overlap_law(const TemperaturePoint& temp, const GaussianField& h,
                                   const ArgmaxSettings& settings = {});
/// Same, reusing a computed argmax report.
PredictedLaw predicted_overlap_law(const TemperaturePoint& temp, const GaussianField& h,
                                   const ArgmaxReport& argmax, int k_max = kDefaultKMax);

struct MagnetizationOverlapBound {
  double mu_squared = 0.0;
  double c = 0.0;
  bool holds = true;
  bool checked = true;  // false when the law is not identifiable (xi = 0)
};

/// (mu^2, smallest support point c of the predicted law, mu^2 <= c + 1e-6).
MagnetizationOverlapBound magnetization_overlap_bound_check(const TemperaturePoint& temp,
                                                            const GaussianField& h,
                                                            const ArgmaxSettings& settings = {});

/// Central differences of F(beta, B, h) with step eps.
double skfi_beta_derivative_fd(const TemperaturePoint& temp, const GaussianField& h,
                               double eps = 1e-4, const ArgmaxSettings& settings = {});
double skfi_beta_p_derivative_fd(const TemperaturePoint& temp, const GaussianField& h, int p,
                                 double eps = 1e-4, const ArgmaxSettings& settings = {});
/// beta_p (1 - int q^{2p} dnu_{B, beta mu + h}).
double skfi_beta_p_derivative_formula(const TemperaturePoint& temp, const GaussianField& h, int p,
                                      const ArgmaxSettings& settings = {});

}  // namespace skfi
