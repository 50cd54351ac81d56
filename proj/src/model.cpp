#include "skfi/model.hpp"

#include <cmath>
#include <string>

#include "skfi/errors.hpp"

namespace skfi {

namespace {

void check_unit_interval(double x, const char* op) {
  if (!(std::abs(x) <= 1.0)) {
    throw DomainError(std::string(op) + ": |x| must be <= 1, got " + std::to_string(x));
  }
}

}  // namespace

MixtureXi::MixtureXi(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw DomainError("MixtureXi: non-finite coefficient");
  }
}

double MixtureXi::coeff(int p) const {
  if (p < 1) throw DomainError("MixtureXi::coeff: p must be >= 1");
  return p <= max_order() ? coeffs_[p - 1] : 0.0;
}

bool MixtureXi::is_zero() const {
  for (double c : coeffs_) {
    if (c != 0.0) return false;
  }
  return true;
}

MixtureXi MixtureXi::with_coeff(int p, double value) const {
  if (p < 1) throw DomainError("MixtureXi::with_coeff: p must be >= 1");
  std::vector<double> c = coeffs_;
  if (static_cast<int>(c.size()) < p) c.resize(p, 0.0);
  c[p - 1] = value;
  return MixtureXi(std::move(c));
}

// Horner in y = x^2: xi = sum_p b_p^2 y^p.
double MixtureXi::value(double x) const {
  check_unit_interval(x, "xi_eval");
  const double y = x * x;
  double acc = 0.0;
  for (int p = max_order(); p >= 1; --p) {
    acc = (acc + coeffs_[p - 1] * coeffs_[p - 1]) * y;
  }
  return acc;
}

std::pair<double, double> MixtureXi::derivs(double x) const {
  check_unit_interval(x, "xi_derivs");
  double d1 = 0.0;
  double d2 = 0.0;
  for (int p = 1; p <= max_order(); ++p) {
    const double b2 = coeffs_[p - 1] * coeffs_[p - 1];
    if (b2 == 0.0) continue;
    const double two_p = 2.0 * p;
    d1 += two_p * b2 * std::pow(x, two_p - 1.0);
    d2 += two_p * (two_p - 1.0) * b2 * (p == 1 ? 1.0 : std::pow(x, two_p - 2.0));
  }
  return {d1, d2};
}

// theta(q) = sum_p (2p - 1) b_p^2 q^{2p}, which avoids cancellation in q xi' - xi.
double MixtureXi::theta(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("theta_eval: q must lie in [0,1], got " + std::to_string(q));
  }
  double acc = 0.0;
  for (int p = 1; p <= max_order(); ++p) {
    const double b2 = coeffs_[p - 1] * coeffs_[p - 1];
    acc += (2.0 * p - 1.0) * b2 * std::pow(q, 2.0 * p);
  }
  return acc;
}

GaussianField::GaussianField(double mean_, double std_) : mean(mean_), std(std_) {
  if (!std::isfinite(mean_) || !std::isfinite(std_) || std_ < 0.0) {
    throw DomainError("GaussianField: need finite mean and std >= 0");
  }
}

TemperaturePoint::TemperaturePoint(double beta_, MixtureXi xi_) : beta(beta_), xi(std::move(xi_)) {
  if (!std::isfinite(beta_) || beta_ < 0.0) {
    throw DomainError("TemperaturePoint: CW temperature beta must be >= 0");
  }
}

double xi_eval(const MixtureXi& xi, double x) { return xi.value(x); }
std::pair<double, double> xi_derivs(const MixtureXi& xi, double x) { return xi.derivs(x); }
double theta_eval(const MixtureXi& xi, double q) { return xi.theta(q); }

void require_centered(const GaussianField& h, const char* op) {
  if (!h.centered()) {
    throw DomainError(std::string(op) + ": external field must be centered (h_mean = 0)");
  }
}

nlohmann::json to_json(const ModelParams& params) {
  return nlohmann::json{{"beta", params.temp.beta},
                        {"coeffs", params.temp.xi.coeffs()},
                        {"h_mean", params.field.mean},
                        {"h_std", params.field.std}};
}

ModelParams model_params_from_json(const nlohmann::json& j) {
  auto number = [&](const char* key, double def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  };
  std::vector<double> coeffs;
  if (j.contains("coeffs")) {
    const auto& c = j.at("coeffs");
    if (!c.is_array()) throw ConfigError("field 'coeffs' must be an array of numbers");
    for (const auto& v : c) {
      if (!v.is_number()) throw ConfigError("field 'coeffs' must be an array of numbers");
      coeffs.push_back(v.get<double>());
    }
  }
  try {
    ModelParams p;
    p.temp = TemperaturePoint(number("beta", 0.0), MixtureXi(std::move(coeffs)));
    p.field = GaussianField(number("h_mean", 0.0), number("h_std", 0.0));
    return p;
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace skfi
