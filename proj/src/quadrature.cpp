#include "skfi/quadrature.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>

namespace skfi {

namespace {

constexpr int kMaxOrder = 256;

// Newton iteration on orthonormal physicists' Hermite polynomials, using the
// classical asymptotic starting guesses for the largest roots and
// extrapolation from previous roots for the rest. Long double keeps the
// smallest weights accurate for high orders.
GaussHermiteRule build_rule(int n) {
  using real = long double;
  const real pim4 = 0.7511255444649424828587030047762276930510L;  // pi^{-1/4}
  std::vector<real> x(n), w(n);
  const int m = (n + 1) / 2;
  real z = 0.0L;
  real pp = 0.0L;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(static_cast<real>(2 * n + 1)) -
          1.85575L * std::pow(static_cast<real>(2 * n + 1), -0.16667L);
    } else if (i == 1) {
      z -= 1.14L * std::pow(static_cast<real>(n), 0.426L) / z;
    } else if (i == 2) {
      z = 1.86L * z - 0.86L * x[0];
    } else if (i == 3) {
      z = 1.91L * z - 0.91L * x[1];
    } else {
      z = 2.0L * z - x[i - 2];
    }
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      real p1 = pim4;
      real p2 = 0.0L;
      for (int j = 0; j < n; ++j) {
        const real p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0L / (j + 1)) * p2 - std::sqrt(static_cast<real>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0L * n) * p2;
      const real z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-17L * std::max<real>(1.0L, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw EvaluationError("gauss_hermite_rule: Newton iteration failed for order " +
                            std::to_string(n));
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0L / (pp * pp);
    w[n - 1 - i] = w[i];
  }

  // Physicists' weight e^{-t^2}: node t -> sqrt(2) t, weight w -> w / sqrt(pi).
  const real sqrt2 = std::sqrt(2.0L);
  const real inv_sqrt_pi = 0.5641895835477562869480794515607725858441L;
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  real total = 0.0L;
  for (int i = 0; i < n; ++i) total += w[i] * inv_sqrt_pi;
  // Ascending order; the recursion above fills x[0] with the largest root.
  for (int i = 0; i < n; ++i) {
    const int src = n - 1 - i;
    rule.nodes[i] = static_cast<double>(sqrt2 * x[src]);
    rule.weights[i] = static_cast<double>(w[src] * inv_sqrt_pi / total);
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

struct RuleCache {
  std::mutex mutex;
  std::array<std::unique_ptr<GaussHermiteRule>, kMaxOrder + 1> full;
  std::array<std::unique_ptr<GaussHermiteRule>, kMaxOrder + 1> pruned;
};

RuleCache& cache() {
  static RuleCache c;
  return c;
}

void check_order(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw DomainError("gauss_hermite_rule: order must be in [1, 256], got " +
                      std::to_string(order));
  }
}

}  // namespace

GaussHermiteRule GaussHermiteRule::pruned(double threshold) const {
  GaussHermiteRule out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (weights[i] >= threshold) {
      out.nodes.push_back(nodes[i]);
      out.weights.push_back(weights[i]);
    }
  }
  return out;
}

const GaussHermiteRule& gauss_hermite_rule(int order) {
  check_order(order);
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  if (!c.full[order]) c.full[order] = std::make_unique<GaussHermiteRule>(build_rule(order));
  return *c.full[order];
}

const GaussHermiteRule& pruned_gauss_hermite_rule(int order) {
  const GaussHermiteRule& full = gauss_hermite_rule(order);
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  if (!c.pruned[order]) c.pruned[order] = std::make_unique<GaussHermiteRule>(full.pruned(1e-18));
  return *c.pruned[order];
}

}  // namespace skfi
