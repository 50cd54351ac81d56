#pragma once

#include "skfi/model.hpp"

namespace skfi {

// Curie-Weiss layer. Fields passed to the *_critical, fixed-point, region and
// RS routines must be centered unless stated otherwise.

/// f(mu, beta) = ln 2 + E ln cosh(beta mu + h) - beta mu^2 / 2.
double cw_curve(double mu, double beta, const GaussianField& h);

/// d/dmu of cw_curve: beta (E tanh(beta mu + h) - mu).
double cw_curve_slope(double mu, double beta, const GaussianField& h);

/// alpha with alpha E[1/cosh^2 h] = 1.
double alpha_critical(const GaussianField& h);

/// The unique mu in (0,1) with E tanh(beta mu + h) = mu; needs beta > alpha.
double cw_fixed_point(double beta, const GaussianField& h);

/// beta_u > alpha with mu(beta_u) = u.
double beta_for_magnetization(double u, const GaussianField& h);

/// delta_u(beta) = f(mu(beta), beta) - f(u, beta); needs beta >= beta_u.
double delta_u(double u, double beta, const GaussianField& h);

struct RegionSpec {
  double u = 0.0;
  double beta_u = 0.0;
  GaussianField field;
};

RegionSpec make_region(double u, const GaussianField& h);

/// beta > beta_u and xi(1) < 2 delta_u(beta). B_d' membership is not checked here.
bool region_contains(double u, const TemperaturePoint& temp, const GaussianField& h);

/// Lemma-level field condition E e^{2|h|} < 1 / max_{b>=0} b / cosh^2 b.
struct FieldCondition {
  double expectation = 0.0;  // E e^{2|h|} = 2 e^{2 s^2} Phi(2 s)
  double threshold = 0.0;    // 1 / max_b b / cosh^2 b
  double maximizer = 0.0;    // root of 2 b tanh b = 1
  bool holds = false;
};

FieldCondition field_condition_report(const GaussianField& h);
bool field_condition(const GaussianField& h);

/// beta E[1/cosh^2(beta + h)] < 1 (expected true whenever field_condition holds).
bool lemma_field_bound_check(double beta, const GaussianField& h);
double lemma_field_bound_value(double beta, const GaussianField& h);

struct RsSolution {
  double mu = 0.0;
  double q = 0.0;
  double residual_mu = 0.0;
  double residual_q = 0.0;
  int iterations = 0;
};

/// Replica-symmetric system mu = E tanh(b1 z sqrt(2q) + beta mu + h),
/// q = E tanh^2(...), by damped alternating iteration from (mu, q) = (1, 1).
RsSolution rs_solve(double beta1, double beta, const GaussianField& h);

/// E 2 b1^2 / cosh^4(b1 z sqrt(2q) + beta mu + h) at the RS point.
double at_line_value(double beta1, double beta, const GaussianField& h);
bool at_line_check(double beta1, double beta, const GaussianField& h);

}  // namespace skfi
