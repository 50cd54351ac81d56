#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#ifdef SKFI_HAVE_BOOST
#include <boost/math/quadrature/gauss_kronrod.hpp>
#endif

#include "skfi/errors.hpp"
#include "skfi/parisi.hpp"
#include "skfi/quadrature.hpp"
#include "skfi/rng.hpp"

using namespace skfi;

namespace {

const double kLn2 = std::log(2.0);

// E ln cosh(s Z) by an adaptive rule independent of the library quadrature.
double mean_log_cosh(double mean, double s) {
  auto f = [](double x) { return std::abs(x) + std::log1p(std::exp(-2 * std::abs(x))) - kLn2; };
  if (s == 0.0) return f(mean);
#ifdef SKFI_HAVE_BOOST
  auto g = [&](double z) { return f(mean + s * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -40.0, 40.0, 10, 1e-13);
#else
  const int n = 400000;
  const double h = 80.0 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = -40.0 + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    acc += w * f(mean + s * z) * std::exp(-0.5 * z * z);
  }
  return acc * h / 3.0 / std::sqrt(2.0 * M_PI);
#endif
}

// P(delta_q) for centered h: the two Gaussians (field and cavity) merge.
double one_atom(const std::vector<double>& b, double h_mean, double h_std, double q) {
  double xi1 = 0, xiq = 0, dxiq = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double p2 = 2.0 * (i + 1);
    const double c = b[i] * b[i];
    xi1 += c;
    xiq += c * std::pow(q, p2);
    dxiq += p2 * c * std::pow(q, p2 - 1);
  }
  return kLn2 + mean_log_cosh(h_mean, std::sqrt(h_std * h_std + dxiq)) +
         0.5 * (xi1 - xiq - (1 - q) * dxiq);
}

}  // namespace

TEST_CASE("measure construction") {
  CHECK_THROWS_AS(DiscreteMeasure({}, {}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({0.5, 0.4}, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({0.5}, {0.9}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({1.2}, {1.0}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({0.1, 0.2}, {1.0, 0.0}), DomainError);
  const DiscreteMeasure nu({0.2, 0.8}, {0.25, 0.75});
  CHECK(nu.cumulative().back() == 1.0);
  CHECK(nu.cdf(0.1) == 0.0);
  CHECK(nu.cdf(0.2) == 0.25);
  CHECK(nu.cdf(0.9) == 1.0);
  const DiscreteMeasure m = DiscreteMeasure::merged({0.5, 0.1, 0.5 + 1e-8}, {0.2, 0.5, 0.3});
  CHECK(m.size() == 2);
  CHECK(m.weights()[1] == doctest::Approx(0.5));
  const DiscreteMeasure f = DiscreteMeasure::merged({0.1, 0.5}, {1.0 - 1e-12, 1e-12}, 1e-6, 1e-10);
  CHECK(f.size() == 1);
  CHECK(measure_from_json(to_json(nu)).atoms() == nu.atoms());
}

TEST_CASE("measure distance and moments") {
  const DiscreteMeasure nu({0.2, 0.8}, {0.5, 0.5});
  CHECK(measure_distance(nu, nu) == 0.0);
  CHECK(measure_distance(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1)) == doctest::Approx(1.0));
  CHECK(measure_distance(DiscreteMeasure::dirac(0.3), DiscreteMeasure::dirac(0.7)) == doctest::Approx(0.4));
  CHECK(measure_distance(nu, DiscreteMeasure::dirac(0.5)) == doctest::Approx(0.5 * 0.3 + 0.5 * 0.3));
  CHECK(parisi_moment(DiscreteMeasure::dirac(0.6), 1) == doctest::Approx(0.36));
  CHECK(parisi_moment(DiscreteMeasure::dirac(0.0), 2) == 0.0);
  CHECK(parisi_moment(nu, 1) == doctest::Approx(0.34));
  CHECK(overlap_support_min(nu) == 0.2);
}

TEST_CASE("phi_solve closed forms") {
  const MixtureXi xi({0.7, 0.3});
  const PhiGrid grid = default_phi_grid(xi, GaussianField(0.0, 0.3));
  const double d1 = xi.derivs(1.0).first;
  const SampledPhi p0 = phi_solve(DiscreteMeasure::dirac(0.0), xi, grid);
  const double q = 0.4;
  const SampledPhi pq = phi_solve(DiscreteMeasure::dirac(q), xi, grid);
  const double dq = xi.derivs(q).first;
  const SampledPhi pz = phi_solve(DiscreteMeasure({0.1, 0.6}, {0.3, 0.7}), MixtureXi(), grid);
  for (double x : {0.0, 0.37, 1.5, 4.0, -2.2}) {
    CHECK(std::abs(p0(x) - (log_cosh(x) + d1 / 2)) <= 1e-9);
    CHECK(std::abs(pq(x) - (mean_log_cosh(x, std::sqrt(dq)) + (d1 - dq) / 2)) <= 1e-9);
    CHECK(std::abs(pz(x) - log_cosh(x)) <= 1e-9);
  }
  CHECK_THROWS_AS(phi_solve(DiscreteMeasure({0.1, 0.5, 0.8}, {0.2, 0.3, 0.5}), xi, PhiGrid{0.5, 1e-2}), DomainError);
}

TEST_CASE("phi is even, convex and 1-Lipschitz") {
  const MixtureXi xi({0.9, 0.4});
  const PhiGrid grid = default_phi_grid(xi, GaussianField(0.0, 0.3));
  const SampledPhi phi = phi_solve(DiscreteMeasure({0.1, 0.5, 0.8}, {0.2, 0.3, 0.5}), xi, grid);
  const auto& v = phi.values();
  const double h = phi.spacing();
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    CHECK(v[i + 1] - 2 * v[i] + v[i - 1] >= -1e-12);
    const double slope = (v[i + 1] - v[i]) / h;
    CHECK(slope >= 0.0);
    // tanh saturates in double precision far out.
    if (i * h < 5.0) {
      CHECK(slope < 1.0);
    } else {
      CHECK(slope <= 1.0 + 1e-9);
    }
  }
  CHECK((v[v.size() - 1] - v[v.size() - 2]) / h > 0.999);
  for (double x : {0.13, 1.7, 3.3}) CHECK(phi(x) == phi(-x));
}

TEST_CASE("one-atom functional against the closed form") {
  for (const auto& b : {std::vector<double>{0.7}, std::vector<double>{0.7, 0.3}}) {
    for (double sd : {0.0, 0.3}) {
      for (int k = 0; k <= 19; ++k) {
        const double q = 0.05 * k;
        const double ref = one_atom(b, 0.0, sd, q);
        ParisiSettings s;
        CHECK(std::abs(parisi_functional(MixtureXi(b), GaussianField(0.0, sd), DiscreteMeasure::dirac(q), s) - ref) <= 1e-8);
        s.method = ParisiMethod::grid;
        CHECK(std::abs(parisi_functional(MixtureXi(b), GaussianField(0.0, sd), DiscreteMeasure::dirac(q), s) - ref) <= 1e-8);
      }
    }
  }
  CHECK(parisi_functional(MixtureXi({1.0}), GaussianField(0.0, 0.0), DiscreteMeasure::dirac(0.0)) ==
        doctest::Approx(kLn2 + 0.5).epsilon(1e-12));
  const DiscreteMeasure nu({0.2, 0.9}, {0.4, 0.6});
  CHECK(std::abs(parisi_functional(MixtureXi(), GaussianField(0.1, 0.3), nu) - (kLn2 + mean_log_cosh(0.1, 0.3))) <= 1e-10);
}

TEST_CASE("fast and grid paths agree on multi-atom measures") {
  const MixtureXi xi({0.9, 0.4});
  const GaussianField h(0.2, 0.3);
  for (const DiscreteMeasure& nu : {DiscreteMeasure({0.1, 0.6}, {0.4, 0.6}),
                                     DiscreteMeasure({0.0, 0.3, 0.7}, {0.2, 0.3, 0.5}),
                                     DiscreteMeasure({0.2, 0.4, 0.6, 0.95}, {0.1, 0.2, 0.3, 0.4})}) {
    ParisiSettings fast;
    ParisiSettings grid;
    grid.method = ParisiMethod::grid;
    CHECK(std::abs(parisi_functional(xi, h, nu, fast) - parisi_functional(xi, h, nu, grid)) <= 1e-8);
  }
}

TEST_CASE("refinement stability") {
  const MixtureXi xi({1.0, 0.5});
  const GaussianField h(0.0, 0.3);
  const DiscreteMeasure nu({0.15, 0.5, 0.85}, {0.3, 0.3, 0.4});
  for (ParisiMethod m : {ParisiMethod::fast, ParisiMethod::grid}) {
    ParisiSettings a;
    a.method = m;
    ParisiSettings b = a;
    b.spacing = a.spacing / 2;
    b.order = a.order * 2;
    CHECK(std::abs(parisi_functional(xi, h, nu, a) - parisi_functional(xi, h, nu, b)) < 1e-8);
  }
}

TEST_CASE("Lipschitz ratio stays bounded") {
  const MixtureXi xi({0.7, 0.3});
  const GaussianField h(0.0, 0.3);
  const double L = xi.derivs(1.0).second;
  StreamRng rng(3, {StreamPurpose::test, 7, 0});
  auto random_measure = [&]() {
    const int k = 1 + static_cast<int>(rng.below(3));
    std::vector<double> a(k), w(k);
    double s = 0;
    for (int i = 0; i < k; ++i) {
      a[i] = rng.uniform();
      w[i] = 0.05 + rng.uniform();
      s += w[i];
    }
    for (double& x : w) x /= s;
    return DiscreteMeasure::merged(a, w);
  };
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const DiscreteMeasure a = random_measure(), b = random_measure();
    const double d = measure_distance(a, b);
    if (d < 1e-6) continue;
    worst = std::max(worst, std::abs(parisi_functional(xi, h, a) - parisi_functional(xi, h, b)) / d);
  }
  CHECK(worst <= L);
}

TEST_CASE("minimization") {
  const ParisiResult zero = parisi_minimize(MixtureXi(), GaussianField(0.0, 0.3), 3);
  CHECK(std::abs(zero.value - (kLn2 + mean_log_cosh(0.0, 0.3))) <= 1e-10);
  CHECK_FALSE(zero.diagnostics.identifiable);

  const ParisiResult ht = parisi_minimize(MixtureXi({0.3}), GaussianField(0.0, 0.0), kDefaultKMax);
  CHECK(std::abs(ht.value - (kLn2 + 0.045)) <= 1e-4);
  CHECK(measure_distance(ht.measure, DiscreteMeasure::dirac(0.0)) <= 1e-3);

  // k = 1 against a brute 1e-4 scan of the closed form.
  double best = 1e300;
  for (int i = 0; i <= 10000; ++i) best = std::min(best, one_atom({0.7}, 0.0, 0.3, i * 1e-4));
  const ParisiResult k1 = parisi_minimize(MixtureXi({0.7}), GaussianField(0.0, 0.3), 1);
  CHECK(std::abs(k1.value - best) <= 1e-6);
  CHECK(k1.diagnostics.order > 0);
  CHECK(k1.diagnostics.half_width > 0);
  CHECK(k1.diagnostics.spacing > 0);
  CHECK(k1.diagnostics.atoms_used == 1);

  const MixtureXi cold({1.5});
  double prev = 1e300;
  for (int k = 1; k <= 2; ++k) {
    const double v = parisi_minimize(cold, GaussianField(0.0, 0.0), k).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  CHECK_THROWS_AS(parisi_minimize(cold, GaussianField(0.0, 0.0), 0), DomainError);
}

TEST_CASE("shifted free energy") {
  CHECK(std::abs(sk_free_energy(MixtureXi(), 0.8, GaussianField(0.0, 0.0)) - (kLn2 + log_cosh(0.8))) <= 1e-12);
  const MixtureXi xi({0.3});
  CHECK(sk_free_energy(xi, 0.0, GaussianField(0.0, 0.3)) ==
        parisi_minimize(xi, GaussianField(0.0, 0.3), kDefaultKMax).value);
  double best = 1e300;
  for (int i = 0; i <= 10000; ++i) best = std::min(best, one_atom({0.3}, 1.0, 0.0, i * 1e-4));
  CHECK(std::abs(sk_free_energy(xi, 1.0, GaussianField(0.0, 0.0)) - best) <= 1e-6);
}

TEST_CASE("beta_p derivative") {
  CHECK(sk_beta_p_derivative(MixtureXi({0.5, 0.0}), GaussianField(0.0, 0.3), 2) == 0.0);
  CHECK(sk_beta_p_derivative(MixtureXi({0.3}), GaussianField(0.0, 0.0), 1) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK_THROWS_AS(sk_beta_p_derivative(MixtureXi({0.3}), GaussianField(0.0, 0.0), 2), DomainError);
  const GaussianField h(0.0, 0.3);
  const double eps = 1e-4;
  const double fd = (sk_free_energy(MixtureXi({0.7 + eps}), 0.0, h) - sk_free_energy(MixtureXi({0.7 - eps}), 0.0, h)) / (2 * eps);
  CHECK(std::abs(sk_beta_p_derivative(MixtureXi({0.7}), h, 1) - fd) <= 1e-4);
}
