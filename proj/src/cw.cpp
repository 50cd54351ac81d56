#include "skfi/cw.hpp"

#include <cmath>
#include <string>

#include "skfi/errors.hpp"
#include "skfi/quadrature.hpp"

namespace skfi {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kRootTol = 1e-12;

// E tanh(a + h) for centered h. Pairing h with -h gives
// sinh(2a) / (cosh 2a + cosh 2h), which keeps full relative accuracy as a -> 0.
double centered_mean_tanh(double a, double sigma) {
  if (std::abs(a) > 20.0) {
    return expect_gaussian([](double x) { return std::tanh(x); }, a, sigma);
  }
  const double s = std::sinh(2.0 * a);
  const double c = std::cosh(2.0 * a);
  return expect_gaussian([&](double x) { return s / (c + std::cosh(2.0 * x)); }, 0.0, sigma);
}

// E tanh(beta mu + h) / mu - 1 for centered h, continuous at mu = 0.
double scaled_fixed_point_gap(double mu, double beta, double sigma) {
  const double x = 2.0 * beta * mu;
  if (x > 40.0) return centered_mean_tanh(beta * mu, sigma) / mu - 1.0;
  const double sinhc = x == 0.0 ? 1.0 : std::sinh(x) / x;
  const double c = std::cosh(x);
  const double ratio = expect_gaussian([&](double z) { return 1.0 / (c + std::cosh(2.0 * z)); },
                                       0.0, sigma);
  return 2.0 * beta * sinhc * ratio - 1.0;
}

double mean_sech2(double mean, double sigma) {
  return expect_gaussian(
      [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
      },
      mean, sigma);
}

}  // namespace

double cw_curve(double mu, double beta, const GaussianField& h) {
  if (!(std::abs(mu) <= 1.0)) throw DomainError("cw_curve: |mu| must be <= 1");
  const double e = expect_gaussian([](double x) { return log_cosh(x); }, beta * mu + h.mean, h.std);
  return kLn2 + e - 0.5 * beta * mu * mu;
}

double cw_curve_slope(double mu, double beta, const GaussianField& h) {
  const double m = h.centered() ? centered_mean_tanh(beta * mu, h.std)
                                : expect_gaussian([](double x) { return std::tanh(x); },
                                                  beta * mu + h.mean, h.std);
  return beta * (m - mu);
}

double alpha_critical(const GaussianField& h) {
  require_centered(h, "alpha_critical");
  return 1.0 / mean_sech2(0.0, h.std);
}

double cw_fixed_point(double beta, const GaussianField& h) {
  require_centered(h, "cw_fixed_point");
  const double alpha = alpha_critical(h);
  if (!(beta > alpha)) {
    throw DomainError("cw_fixed_point: beta = " + std::to_string(beta) +
                      " must exceed the critical value alpha = " + std::to_string(alpha));
  }
  double lo = 0.0;
  double hi = 1.0;
  if (!(scaled_fixed_point_gap(lo, beta, h.std) > 0.0) ||
      !(scaled_fixed_point_gap(hi, beta, h.std) < 0.0)) {
    throw EvaluationError("cw_fixed_point: root is not bracketed by [0, 1]");
  }
  while (hi - lo > 0.25 * kRootTol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (scaled_fixed_point_gap(mid, beta, h.std) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double beta_for_magnetization(double u, const GaussianField& h) {
  require_centered(h, "beta_for_magnetization");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("beta_for_magnetization: u must lie in (0,1)");
  // mu(b) = u exactly when u solves the fixed-point equation at b, and
  // E tanh(b u + h) is increasing in b.
  const double alpha = alpha_critical(h);
  double lo = alpha * (1.0 + 1e-9);
  double hi = 1e3;
  auto gap = [&](double b) { return centered_mean_tanh(b * u, h.std) - u; };
  if (!(gap(lo) < 0.0) || !(gap(hi) > 0.0)) {
    throw EvaluationError("beta_for_magnetization: bracket [alpha(1+1e-9), 1e3] does not contain beta_u");
  }
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (gap(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double delta_u(double u, double beta, const GaussianField& h) {
  const double bu = beta_for_magnetization(u, h);
  if (beta < bu * (1.0 - 1e-12)) {
    throw DomainError("delta_u: beta = " + std::to_string(beta) + " is below beta_u = " +
                      std::to_string(bu));
  }
  if (beta <= bu) return 0.0;
  const double mu = cw_fixed_point(beta, h);
  const double d = cw_curve(mu, beta, h) - cw_curve(u, beta, h);
  return d > 0.0 ? d : 0.0;
}

RegionSpec make_region(double u, const GaussianField& h) {
  RegionSpec r;
  r.u = u;
  r.beta_u = beta_for_magnetization(u, h);
  r.field = h;
  return r;
}

bool region_contains(double u, const TemperaturePoint& temp, const GaussianField& h) {
  const double bu = beta_for_magnetization(u, h);
  if (!(temp.beta > bu)) return false;
  return temp.xi.value(1.0) < 2.0 * delta_u(u, temp.beta, h);
}

FieldCondition field_condition_report(const GaussianField& h) {
  require_centered(h, "field_condition");
  FieldCondition out;
  const double s = h.std;
  const double phi = 0.5 * std::erfc(-2.0 * s / std::sqrt(2.0));
  out.expectation = 2.0 * std::exp(2.0 * s * s) * phi;
  // b / cosh^2 b is maximal where 2 b tanh b = 1.
  double lo = 0.0;
  double hi = 2.0;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (2.0 * mid * std::tanh(mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.maximizer = 0.5 * (lo + hi);
  const double c = std::cosh(out.maximizer);
  out.threshold = c * c / out.maximizer;
  out.holds = out.expectation < out.threshold;
  return out;
}

bool field_condition(const GaussianField& h) { return field_condition_report(h).holds; }

double lemma_field_bound_value(double beta, const GaussianField& h) {
  require_centered(h, "lemma_field_bound_check");
  if (!(beta >= 0.0)) throw DomainError("lemma_field_bound_check: beta must be >= 0");
  return beta * mean_sech2(beta, h.std);
}

bool lemma_field_bound_check(double beta, const GaussianField& h) {
  return lemma_field_bound_value(beta, h) < 1.0;
}

RsSolution rs_solve(double beta1, double beta, const GaussianField& h) {
  require_centered(h, "rs_solve");
  constexpr double damping = 0.5;
  constexpr int max_iter = 100000;
  auto spread = [&](double q) { return std::sqrt(2.0 * beta1 * beta1 * q + h.std * h.std); };
  auto mean_tanh = [&](double mu, double q) {
    return expect_gaussian([](double x) { return std::tanh(x); }, beta * mu, spread(q));
  };
  auto mean_tanh2 = [&](double mu, double q) {
    return expect_gaussian(
        [](double x) {
          const double t = std::tanh(x);
          return t * t;
        },
        beta * mu, spread(q));
  };

  RsSolution s;
  double mu = 1.0;
  double q = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const double mu_new = (1.0 - damping) * mu + damping * mean_tanh(mu, q);
    const double q_new = (1.0 - damping) * q + damping * mean_tanh2(mu_new, q);
    const double change = std::max(std::abs(mu_new - mu), std::abs(q_new - q));
    mu = mu_new;
    q = q_new;
    if (change < 1e-12) {
      s.iterations = it;
      s.mu = mu;
      s.q = q;
      s.residual_mu = std::abs(mu - mean_tanh(mu, q));
      s.residual_q = std::abs(q - mean_tanh2(mu, q));
      if (s.residual_mu > 1e-10 || s.residual_q > 1e-10) {
        throw EvaluationError("rs_solve: iteration stalled with residual above 1e-10");
      }
      return s;
    }
  }
  throw EvaluationError("rs_solve: no convergence after 1e5 damped iterations");
}

double at_line_value(double beta1, double beta, const GaussianField& h) {
  const RsSolution rs = rs_solve(beta1, beta, h);
  const double spread = std::sqrt(2.0 * beta1 * beta1 * rs.q + h.std * h.std);
  return expect_gaussian(
      [&](double x) {
        const double c = std::cosh(x);
        const double c2 = c * c;
        return 2.0 * beta1 * beta1 / (c2 * c2);
      },
      beta * rs.mu, spread);
}

bool at_line_check(double beta1, double beta, const GaussianField& h) {
  return at_line_value(beta1, beta, h) < 1.0;
}

}  // namespace skfi
