#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

namespace skfi {

/// Even mixture xi(x) = sum_p beta_p^2 x^{2p}; coeffs[p-1] is beta_p.
///
/// Only beta_p^2 enters xi, so negative coefficients are allowed. An empty
/// list is the zero mixture (pure Curie-Weiss).
class MixtureXi {
 public:
  MixtureXi() = default;
  explicit MixtureXi(std::vector<double> coeffs);

  const std::vector<double>& coeffs() const { return coeffs_; }
  int max_order() const { return static_cast<int>(coeffs_.size()); }
  double coeff(int p) const;  // beta_p, 0 beyond the list
  bool is_zero() const;

  /// Copy with beta_p replaced (list extended with zeros if needed).
  MixtureXi with_coeff(int p, double value) const;

  double value(double x) const;
  std::pair<double, double> derivs(double x) const;
  double theta(double q) const;

 private:
  std::vector<double> coeffs_;
};

/// Gaussian external field h ~ N(mean, std^2); std = 0 is the constant field.
struct GaussianField {
  double mean = 0.0;
  double std = 0.0;

  GaussianField() = default;
  GaussianField(double mean_, double std_);

  bool centered() const { return mean == 0.0; }
  bool degenerate() const { return std == 0.0; }
  GaussianField shifted(double shift) const { return {mean + shift, std}; }
};

/// Curie-Weiss inverse temperature beta >= 0 together with the SK mixture.
struct TemperaturePoint {
  double beta = 0.0;
  MixtureXi xi;

  TemperaturePoint() = default;
  TemperaturePoint(double beta_, MixtureXi xi_);
};

double xi_eval(const MixtureXi& xi, double x);
std::pair<double, double> xi_derivs(const MixtureXi& xi, double x);
double theta_eval(const MixtureXi& xi, double q);

/// Throws DomainError unless the field is centered.
void require_centered(const GaussianField& h, const char* op);

/// The canonical parameter block {"beta", "coeffs", "h_mean", "h_std"}.
struct ModelParams {
  TemperaturePoint temp;
  GaussianField field;
};

nlohmann::json to_json(const ModelParams& params);
/// Reads the parameter keys from `j`; missing keys take defaults
/// (beta 0, coeffs [], h_mean 0, h_std 0). Other keys are ignored here.
ModelParams model_params_from_json(const nlohmann::json& j);

}  // namespace skfi
