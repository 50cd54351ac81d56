#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#ifdef SKFI_HAVE_BOOST
#include <boost/math/quadrature/gauss_kronrod.hpp>
#endif

#include "skfi/cw.hpp"
#include "skfi/errors.hpp"
#include "skfi/quadrature.hpp"

using namespace skfi;

namespace {

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Root of mu = tanh(beta mu) in (0, 1].
double scalar_fixed_point(double beta) {
  return bisect([beta](double m) { return std::tanh(beta * m) - m; }, 1e-9, 1.0);
}

double normal_expectation(const std::function<double(double)>& f, double s) {
#ifdef SKFI_HAVE_BOOST
  auto g = [&](double z) { return f(s * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -40.0, 40.0, 15, 1e-14);
#else
  const int n = 200000;
  const double h = 80.0 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = -40.0 + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    acc += w * f(s * z) * std::exp(-0.5 * z * z);
  }
  return acc * h / 3.0 / std::sqrt(2.0 * M_PI);
#endif
}

const double kLn2 = std::log(2.0);

}  // namespace

TEST_CASE("cw_curve values") {
  const GaussianField zero(0.0, 0.0);
  CHECK(cw_curve(0.0, 3.7, zero) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(cw_curve(1.0, 2.0, zero) == doctest::Approx(kLn2 + std::log(std::cosh(2.0)) - 1.0).epsilon(1e-14));
  const double ref = kLn2 + normal_expectation([](double x) { return std::log(std::cosh(0.5 + x)); }, 0.3) - 0.125;
  CHECK(std::abs(cw_curve(0.5, 1.0, GaussianField(0.0, 0.3)) - ref) <= 1e-10);
  for (double mu : {0.1, 0.4, 0.9}) {
    CHECK(cw_curve(-mu, 1.7, GaussianField(0.0, 0.3)) == doctest::Approx(cw_curve(mu, 1.7, GaussianField(0.0, 0.3))).epsilon(1e-14));
  }
}

TEST_CASE("critical alpha") {
  CHECK(alpha_critical(GaussianField(0.0, 0.0)) == 1.0);
  CHECK_THROWS_AS(alpha_critical(GaussianField(0.3, 0.0)), DomainError);
  const double ref = 1.0 / normal_expectation([](double x) { return 1.0 / (std::cosh(x) * std::cosh(x)); }, 0.3);
  CHECK(alpha_critical(GaussianField(0.0, 0.3)) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("fixed points") {
  const GaussianField zero(0.0, 0.0);
  CHECK(std::abs(cw_fixed_point(2.0, zero) - scalar_fixed_point(2.0)) <= 1e-10);
  CHECK(std::abs(cw_fixed_point(2.0, zero) - 0.9575) <= 1e-4);
  CHECK(cw_fixed_point(1.0 + 1e-6, zero) < 1e-2);
  CHECK(cw_fixed_point(10.0, zero) > 0.999);
  CHECK_THROWS_AS(cw_fixed_point(0.5, zero), DomainError);
  CHECK_THROWS_AS(cw_fixed_point(1.0, zero), DomainError);
  const GaussianField h(0.0, 0.3);
  const double a = alpha_critical(h);
  for (double b = a + 0.05; b < 6.0; b += 0.37) {
    CHECK(cw_fixed_point(b + 0.1, h) > cw_fixed_point(b, h));
  }
}

TEST_CASE("cw curve shape around the fixed point") {
  const GaussianField h(0.0, 0.3);
  const double beta = 2.2;
  const double mu = cw_fixed_point(beta, h);
  CHECK(std::abs(cw_curve_slope(0.0, beta, h)) <= 1e-15);
  CHECK(std::abs(cw_curve_slope(mu, beta, h)) <= 1e-10);
  for (int i = 1; i < 100; ++i) {
    const double x = i / 100.0;
    if (std::abs(x - mu) < 1e-6) continue;
    const double s = cw_curve_slope(x, beta, h);
    if (x < mu) {
      CHECK(s > 0.0);
    } else {
      CHECK(s < 0.0);
    }
  }
}

TEST_CASE("envelope derivative of f(mu(beta), beta)") {
  const GaussianField h(0.0, 0.3);
  for (double beta : {1.5, 2.0, 4.0}) {
    const double eps = 1e-5;
    auto F = [&](double b) { return cw_curve(cw_fixed_point(b, h), b, h); };
    const double fd = (F(beta + eps) - F(beta - eps)) / (2 * eps);
    const double mu = cw_fixed_point(beta, h);
    CHECK(std::abs(fd - 0.5 * mu * mu) <= 1e-6);
  }
}

TEST_CASE("beta for magnetization") {
  const GaussianField zero(0.0, 0.0);
  const double b = beta_for_magnetization(scalar_fixed_point(2.0), zero);
  CHECK(std::abs(b - 2.0) <= 1e-8);
  CHECK(std::abs(beta_for_magnetization(0.01, zero) - 1.0) <= 1e-3);
  const GaussianField h(0.0, 0.3);
  double prev = 0.0;
  for (double u : {0.1, 0.3, 0.6, 0.9}) {
    const double bu = beta_for_magnetization(u, h);
    CHECK(bu > prev);
    CHECK(std::abs(cw_fixed_point(bu, h) - u) <= 1e-10);
    prev = bu;
  }
}

TEST_CASE("delta_u") {
  const GaussianField zero(0.0, 0.0);
  const double bu = beta_for_magnetization(0.5, zero);
  CHECK(std::abs(delta_u(0.5, bu, zero)) <= 1e-9);
  CHECK(delta_u(0.5, bu + 0.5, zero) > delta_u(0.5, bu + 0.1, zero));
  CHECK_THROWS_AS(delta_u(0.5, bu - 0.1, zero), DomainError);
  const double m3 = scalar_fixed_point(3.0);
  auto f = [](double m) { return kLn2 + std::log(std::cosh(3.0 * m)) - 1.5 * m * m; };
  CHECK(delta_u(0.5, 3.0, zero) == doctest::Approx(f(m3) - f(0.5)).epsilon(1e-10));
}

TEST_CASE("region membership") {
  const GaussianField zero(0.0, 0.0);
  const double bu = beta_for_magnetization(0.6, zero);
  CHECK(region_contains(0.6, TemperaturePoint(bu + 0.1, MixtureXi()), zero));
  CHECK_FALSE(region_contains(0.6, TemperaturePoint(bu, MixtureXi()), zero));
  const double d = delta_u(0.6, 3.0, zero);
  CHECK(region_contains(0.6, TemperaturePoint(3.0, MixtureXi({0.1})), zero) == (0.01 < 2 * d));
  const double big = std::sqrt(2 * d) * 1.01;
  CHECK_FALSE(region_contains(0.6, TemperaturePoint(3.0, MixtureXi({big})), zero));
  const RegionSpec spec = make_region(0.6, GaussianField(0.0, 0.3));
  CHECK(spec.beta_u > alpha_critical(GaussianField(0.0, 0.3)));
}

TEST_CASE("field condition") {
  const double bstar = bisect([](double b) { return 2 * b * std::tanh(b) - 1; }, 0.1, 2.0);
  const double threshold = std::cosh(bstar) * std::cosh(bstar) / bstar;
  const FieldCondition f0 = field_condition_report(GaussianField(0.0, 0.0));
  CHECK(f0.expectation == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f0.maximizer == doctest::Approx(bstar).epsilon(1e-10));
  CHECK(f0.threshold == doctest::Approx(threshold).epsilon(1e-10));
  CHECK(std::abs(f0.threshold - 2.2332) < 5e-4);
  CHECK(std::abs(f0.maximizer - 0.7717) < 1e-4);
  CHECK(f0.holds);
  const FieldCondition f3 = field_condition_report(GaussianField(0.0, 0.3));
  const double closed = 2 * std::exp(0.18) * 0.5 * std::erfc(-0.6 / std::sqrt(2.0));
  CHECK(f3.expectation == doctest::Approx(closed).epsilon(1e-13));
  CHECK(std::abs(f3.expectation - 1.7376) < 5e-4);
  CHECK(field_condition(GaussianField(0.0, 0.3)));
  CHECK_FALSE(field_condition(GaussianField(0.0, 1.0)));
}

TEST_CASE("lemma field bound") {
  const GaussianField zero(0.0, 0.0);
  CHECK(lemma_field_bound_check(0.0, zero));
  CHECK(lemma_field_bound_value(0.7717, zero) == doctest::Approx(0.7717 / std::pow(std::cosh(0.7717), 2)).epsilon(1e-12));
  CHECK(std::abs(lemma_field_bound_value(0.7717, zero) - 0.4478) < 1e-4);
  const GaussianField h(0.0, 0.3);
  for (int i = 1; i <= 100; ++i) CHECK(lemma_field_bound_check(0.1 * i, h));
}

TEST_CASE("replica-symmetric system") {
  const RsSolution s0 = rs_solve(0.0, 0.0, GaussianField(0.0, 0.0));
  CHECK(std::abs(s0.mu) <= 1e-10);
  CHECK(std::abs(s0.q) <= 1e-10);
  const RsSolution s1 = rs_solve(0.0, 2.0, GaussianField(0.0, 0.0));
  CHECK(std::abs(s1.mu - scalar_fixed_point(2.0)) <= 1e-9);
  CHECK(std::abs(s1.q - s1.mu * s1.mu) <= 1e-9);
  const RsSolution s2 = rs_solve(0.3, 0.0, GaussianField(0.0, 0.3));
  const double mu = expect_gaussian([&](double x) {
    return expect_gaussian([&](double z) { return std::tanh(z); }, x, 0.3 * std::sqrt(2 * s2.q));
  }, 0.0, 0.3);
  CHECK(std::abs(mu - s2.mu) <= 1e-10);
  CHECK(std::abs(s2.residual_mu) <= 1e-10);
  CHECK(std::abs(s2.residual_q) <= 1e-10);
}

TEST_CASE("AT line") {
  CHECK(at_line_check(0.0, 1.0, GaussianField(0.0, 0.3)));
  CHECK(at_line_check(0.1, 2.0, GaussianField(0.0, 0.3)));
  CHECK_FALSE(at_line_check(2.0, 0.0, GaussianField(0.0, 0.0)));
}
