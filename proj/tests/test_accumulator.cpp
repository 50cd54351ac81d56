#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "skfi/accumulator.hpp"
#include "skfi/errors.hpp"
#include "skfi/rng.hpp"

using namespace skfi;

TEST_CASE("exact sum survives cancellation") {
  ExactSum s;
  for (double x : {1e100, 1.0, -1e100}) s.add(x);
  CHECK(s.value() == 1.0);
  ExactSum t;
  for (int i = 0; i < 10; ++i) t.add(0.1);
  CHECK(t.value() == 1.0);
  CHECK_THROWS_AS(t.add(NAN), EvaluationError);
}

TEST_CASE("merge equals single-pass accumulation exactly") {
  StreamRng r(11, {StreamPurpose::test, 1, 0});
  std::vector<double> xs(3000);
  for (double& x : xs) x = std::exp(8.0 * r.normal()) * (r.uniform() < 0.5 ? -1 : 1);
  MomentAccumulator all, a, b, c;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add("x", xs[i]);
    (i < 1000 ? a : i < 2000 ? b : c).add("x", xs[i]);
  }
  MomentAccumulator ab_c = a;
  ab_c.merge(b);
  ab_c.merge(c);
  MomentAccumulator c_ba = c;
  MomentAccumulator ba = b;
  ba.merge(a);
  c_ba.merge(ba);
  CHECK(ab_c.count("x") == all.count("x"));
  CHECK(ab_c.mean("x") == all.mean("x"));
  CHECK(c_ba.mean("x") == all.mean("x"));
  CHECK(c_ba.variance("x") == all.variance("x"));
}

TEST_CASE("moments") {
  MomentAccumulator m;
  for (double x : {1.0, 2.0, 3.0, 4.0}) m.add("x", x);
  CHECK(m.mean("x") == 2.5);
  CHECK(m.variance("x") == doctest::Approx(5.0 / 3.0));
  CHECK(m.stderr_of_mean("x") == doctest::Approx(std::sqrt(5.0 / 12.0)));
  for (int i = 0; i < 5; ++i) m.add("const", 0.1);
  CHECK(m.variance("const") >= 0.0);
  CHECK(m.has("x"));
  CHECK_FALSE(m.has("y"));
  CHECK_THROWS_AS(m.mean("y"), DomainError);
}

TEST_CASE("batch means of an i.i.d. series") {
  StreamRng r(5, {StreamPurpose::test, 2, 0});
  std::vector<double> xs(100000);
  for (double& x : xs) x = r.normal();
  const double se = batch_means_stderr(xs, 20);
  CHECK(se == doctest::Approx(1.0 / std::sqrt(1e5)).epsilon(0.5));
  CHECK(batch_means_stderr({1.0}) == 0.0);
}
