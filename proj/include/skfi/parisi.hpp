#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "skfi/model.hpp"
#include "skfi/quadrature.hpp"

namespace skfi {

/// Finite-atom probability measure on [0,1] (a candidate Parisi measure).
class DiscreteMeasure {
 public:
  /// Atoms strictly increasing in [0,1], weights positive and summing to 1
  /// within 1e-14 (renormalized exactly on construction).
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(double q);

  /// Sorts atoms, merges atoms closer than `merge_tol` (weights summed) and
  /// folds atoms with weight below `weight_floor` into their nearest neighbour.
  static DiscreteMeasure merged(std::vector<double> atoms, std::vector<double> weights,
                                double merge_tol = 1e-6, double weight_floor = 0.0);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  /// m_l = nu([0, q_l]) for l = 0..size()-1; the last entry is exactly 1.
  const std::vector<double>& cumulative() const { return cumulative_; }
  /// nu([0, q]).
  double cdf(double q) const;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// int_0^1 |nu1([0,q]) - nu2([0,q])| dq, exact for step CDFs.
double measure_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// sum_l w_l q_l^{2p}.
double parisi_moment(const DiscreteMeasure& nu, int p);

/// Smallest atom of the measure.
double overlap_support_min(const DiscreteMeasure& nu);

nlohmann::json to_json(const DiscreteMeasure& nu);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

/// x-grid for Phi_nu(., q): nodes x_i = i * spacing on [0, half_width].
/// Phi_nu(., q) is even in x so only x >= 0 is stored.
struct PhiGrid {
  double half_width = 0.0;
  double spacing = 1e-2;
};

/// Grid wide enough for the field h: |h.mean| + 12 + 10 sqrt(h.std^2 + xi'(1)).
PhiGrid default_phi_grid(const MixtureXi& xi, const GaussianField& h);

/// Phi sampled on a PhiGrid. Off-grid values use 4-point Lagrange (cubic)
/// interpolation; beyond the grid the ln cosh asymptote Phi(x) = Phi(W) + |x| - W.
class SampledPhi {
 public:
  SampledPhi(double spacing, std::vector<double> values);

  double spacing() const { return spacing_; }
  double half_width() const { return spacing_ * static_cast<double>(values_.size() - 1); }
  const std::vector<double>& values() const { return values_; }
  double operator()(double x) const;

 private:
  double at_index(long j) const;

  double spacing_;
  std::vector<double> values_;
};

/// Phi_nu(., 0) on the grid by backward per-interval recursion from
/// Phi_nu(x, 1) = ln cosh x. On an interval where nu([0,q]) = m is constant
/// and xi' grows by D, Phi(x, q_l) = (1/m) ln E exp(m Phi(x + z sqrt(D), q_l+1))
/// (plain expectation when m = 0).
SampledPhi phi_solve(const DiscreteMeasure& nu, const MixtureXi& xi, const PhiGrid& grid,
                     int order = kDefaultQuadratureOrder);

enum class ParisiMethod {
  /// Closed form for the top interval, nested quadrature where it is cheaper,
  /// grid recursion for deeper levels; the field expectation is merged with
  /// the mass-zero interval into one Gaussian.
  fast,
  /// phi_solve on the full grid, then E over h of the sampled Phi(., 0).
  grid,
};

struct ParisiSettings {
  int order = kDefaultQuadratureOrder;
  double spacing = 1e-2;
  double half_width = 0.0;  // 0 selects default_phi_grid
  ParisiMethod method = ParisiMethod::fast;
};

/// P(B, h, nu) = ln 2 + E Phi_nu(h, 0) - theta(1)/2 + (1/2) sum_l w_l theta(q_l).
double parisi_functional(const MixtureXi& xi, const GaussianField& h, const DiscreteMeasure& nu,
                         const ParisiSettings& settings = {});

struct ParisiDiagnostics {
  double half_width = 0.0;
  double spacing = 0.0;
  int order = 0;
  int atoms_used = 0;   // atom count of the returned measure
  int k_reached = 0;    // largest k optimized
  int k_max = 0;
  std::vector<double> level_values;  // best value per k
  long evaluations = 0;
  int restarts = 0;
  /// Restarts at the winning k within 1e-9 of the best value but at measure
  /// distance > 1e-3 from the returned minimizer.
  int near_ties = 0;
  /// False when xi = 0: the functional does not depend on nu.
  bool identifiable = true;
};

struct ParisiResult {
  double value = 0.0;
  DiscreteMeasure measure = DiscreteMeasure::dirac(0.0);
  ParisiDiagnostics diagnostics;
};

struct MinimizeSettings {
  ParisiSettings functional;
  int restarts = 8;
  std::uint64_t seed = 0x5eed5eedULL;
  double pass_tolerance = 1e-9;     // stop coordinate passes below this improvement
  double level_tolerance = 1e-7;    // stop increasing k below this improvement
  double coordinate_tolerance = 1e-8;
  double merge_tol = 1e-6;
  double weight_floor = 1e-10;
};

/// Approximates inf over finite-atom measures with at most k_max atoms by
/// coordinate-wise golden-section search from fixed-seed restarts.
ParisiResult parisi_minimize(const MixtureXi& xi, const GaussianField& h, int k_max,
                             const MinimizeSettings& settings = {});

inline constexpr int kDefaultKMax = 4;

/// F^SK(B, shift + h) = parisi_minimize(xi, h shifted by `shift`).value.
double sk_free_energy(const MixtureXi& xi, double shift, const GaussianField& h,
                      int k_max = kDefaultKMax);

/// beta_p (1 - int q^{2p} dnu*) with nu* the numerical Parisi minimizer.
double sk_beta_p_derivative(const MixtureXi& xi, const GaussianField& h, int p,
                            int k_max = kDefaultKMax);

}  // namespace skfi
