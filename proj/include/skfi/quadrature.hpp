#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "skfi/errors.hpp"

namespace skfi {

inline constexpr int kDefaultQuadratureOrder = 64;

/// Gauss-Hermite rule for the standard normal weight e^{-x^2/2}/sqrt(2 pi).
/// Nodes are ascending and symmetric about 0; weights sum to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Drops nodes whose weight is below `threshold`. The dropped mass is
  /// below size() * threshold; used in hot loops where such nodes cannot
  /// move a double-precision result.
  GaussHermiteRule pruned(double threshold) const;
};

/// Cached, immutable rule of the given order (1..256).
const GaussHermiteRule& gauss_hermite_rule(int order);

/// Rule with weights below 1e-18 removed.
const GaussHermiteRule& pruned_gauss_hermite_rule(int order);

/// E f(mean + std * Z), Z standard normal. std = 0 returns f(mean) exactly.
template <class F>
double expect_gaussian(F&& f, double mean, double std, const GaussHermiteRule& rule) {
  if (std == 0.0) {
    const double v = f(mean);
    if (!std::isfinite(v)) throw EvaluationError("expect_gaussian: integrand is not finite");
    return v;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    acc += rule.weights[i] * f(mean + std * rule.nodes[i]);
  }
  if (!std::isfinite(acc)) throw EvaluationError("expect_gaussian: integrand is not finite");
  return acc;
}

template <class F>
double expect_gaussian(F&& f, double mean, double std, int order = kDefaultQuadratureOrder) {
  if (std < 0.0) throw DomainError("expect_gaussian: std must be >= 0");
  return expect_gaussian(std::forward<F>(f), mean, std, gauss_hermite_rule(order));
}

/// ln cosh(x) without overflow.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - 0.69314718055994530942;
}

}  // namespace skfi
