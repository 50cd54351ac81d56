#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skfi/errors.hpp"
#include "skfi/model.hpp"

using namespace skfi;

TEST_CASE("mixture values") {
  const MixtureXi xi({0.7, 0.3});
  const double x = 0.6;
  const double expect = 0.49 * x * x + 0.09 * std::pow(x, 4);
  CHECK(xi.value(x) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(xi.value(-x) == xi.value(x));
  CHECK(xi_eval(xi, 1.0) == doctest::Approx(0.58).epsilon(1e-15));
  CHECK(MixtureXi().value(0.4) == 0.0);
  CHECK(MixtureXi().is_zero());
  CHECK(MixtureXi({0.0, 0.0}).is_zero());
  CHECK(MixtureXi({-0.5}).value(1.0) == doctest::Approx(0.25));
}

TEST_CASE("mixture derivatives match central differences") {
  const MixtureXi xi({0.7, 0.3, 0.2});
  for (double x : {0.0, 0.2, 0.5, 0.9}) {
    const double h = 1e-5;
    const auto [d1, d2] = xi.derivs(x);
    const double fd1 = (xi.value(std::min(1.0, x + h)) - xi.value(x - h)) / (std::min(1.0, x + h) - (x - h));
    CHECK(d1 == doctest::Approx(fd1).epsilon(1e-8));
    const double fd2 = (xi.derivs(x + h).first - xi.derivs(x - h).first) / (2 * h);
    CHECK(d2 == doctest::Approx(fd2).epsilon(1e-7));
  }
}

TEST_CASE("theta is q xi' - xi") {
  const MixtureXi xi({0.7, 0.3});
  for (double q : {0.0, 0.3, 0.8, 1.0}) {
    CHECK(xi.theta(q) == doctest::Approx(q * xi.derivs(q).first - xi.value(q)).epsilon(1e-14));
    CHECK(theta_eval(xi, q) == doctest::Approx(0.49 * q * q + 3 * 0.09 * std::pow(q, 4)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(xi.theta(1.1), DomainError);
  CHECK_THROWS_AS(xi.theta(-0.1), DomainError);
  CHECK_THROWS_AS(xi.value(1.5), DomainError);
}

TEST_CASE("coefficient access") {
  const MixtureXi xi({0.7});
  CHECK(xi.coeff(1) == 0.7);
  CHECK(xi.coeff(3) == 0.0);
  const MixtureXi ext = xi.with_coeff(3, 0.2);
  CHECK(ext.max_order() == 3);
  CHECK(ext.coeff(2) == 0.0);
  CHECK(ext.coeff(3) == 0.2);
  CHECK_THROWS_AS(xi.coeff(0), DomainError);
  CHECK_THROWS_AS(MixtureXi({NAN}), DomainError);
}

TEST_CASE("field and temperature validation") {
  CHECK_THROWS_AS(GaussianField(0.0, -1.0), DomainError);
  CHECK_THROWS_AS(TemperaturePoint(-0.1, MixtureXi()), DomainError);
  const GaussianField h(0.0, 0.3);
  CHECK(h.centered());
  CHECK_FALSE(h.degenerate());
  CHECK(h.shifted(0.5).mean == 0.5);
  CHECK_NOTHROW(require_centered(h, "test"));
  CHECK_THROWS_AS(require_centered(h.shifted(0.1), "test"), DomainError);
}

TEST_CASE("parameter JSON round trip") {
  ModelParams p{TemperaturePoint(1.5, MixtureXi({0.5, 0.2})), GaussianField(0.1, 0.3)};
  const ModelParams q = model_params_from_json(to_json(p));
  CHECK(q.temp.beta == 1.5);
  CHECK(q.temp.xi.coeffs() == p.temp.xi.coeffs());
  CHECK(q.field.mean == 0.1);
  CHECK(q.field.std == 0.3);
  CHECK_THROWS_AS(model_params_from_json(nlohmann::json{{"beta", "hot"}}), ConfigError);
  CHECK_THROWS_AS(model_params_from_json(nlohmann::json{{"h_std", -1}}), ConfigError);
}
