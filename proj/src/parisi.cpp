#include "skfi/parisi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "skfi/errors.hpp"
#include "skfi/rng.hpp"

namespace skfi {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty() || atoms_.size() != weights_.size()) {
    throw DomainError("DiscreteMeasure: need k >= 1 atoms and one weight per atom");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < atoms_.size(); ++l) {
    if (!(atoms_[l] >= 0.0 && atoms_[l] <= 1.0)) {
      throw DomainError("DiscreteMeasure: atoms must lie in [0,1]");
    }
    if (l > 0 && !(atoms_[l] > atoms_[l - 1])) {
      throw DomainError("DiscreteMeasure: atoms must be strictly increasing");
    }
    if (!(weights_[l] > 0.0)) throw DomainError("DiscreteMeasure: weights must be positive");
    total += weights_[l];
  }
  if (std::abs(total - 1.0) > 1e-14 * static_cast<double>(atoms_.size())) {
    throw DomainError("DiscreteMeasure: weights must sum to 1");
  }
  cumulative_.resize(atoms_.size());
  double acc = 0.0;
  for (std::size_t l = 0; l < atoms_.size(); ++l) {
    acc += weights_[l];
    cumulative_[l] = acc;
  }
  cumulative_.back() = 1.0;
}

DiscreteMeasure DiscreteMeasure::dirac(double q) { return DiscreteMeasure({q}, {1.0}); }

DiscreteMeasure DiscreteMeasure::merged(std::vector<double> atoms, std::vector<double> weights,
                                        double merge_tol, double weight_floor) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw DomainError("DiscreteMeasure::merged: need matching non-empty atoms and weights");
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  std::vector<double> qs;
  std::vector<double> ws;
  for (std::size_t idx : order) {
    if (!qs.empty() && atoms[idx] - qs.back() < merge_tol) {
      ws.back() += weights[idx];
    } else {
      qs.push_back(atoms[idx]);
      ws.push_back(weights[idx]);
    }
  }
  // Fold negligible atoms into the nearest remaining atom.
  while (qs.size() > 1) {
    auto it = std::min_element(ws.begin(), ws.end());
    if (*it >= weight_floor) break;
    const auto l = static_cast<std::size_t>(it - ws.begin());
    std::size_t target;
    if (l == 0) {
      target = 1;
    } else if (l + 1 == qs.size()) {
      target = l - 1;
    } else {
      target = (qs[l] - qs[l - 1] <= qs[l + 1] - qs[l]) ? l - 1 : l + 1;
    }
    ws[target] += ws[l];
    qs.erase(qs.begin() + static_cast<long>(l));
    ws.erase(ws.begin() + static_cast<long>(l));
  }
  const double total = std::accumulate(ws.begin(), ws.end(), 0.0);
  for (double& w : ws) w /= total;
  for (double& q : qs) q = std::clamp(q, 0.0, 1.0);
  return DiscreteMeasure(std::move(qs), std::move(ws));
}

double DiscreteMeasure::cdf(double q) const {
  double acc = 0.0;
  for (std::size_t l = 0; l < atoms_.size() && atoms_[l] <= q; ++l) acc = cumulative_[l];
  return acc;
}

double measure_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> cuts{0.0, 1.0};
  cuts.insert(cuts.end(), a.atoms().begin(), a.atoms().end());
  cuts.insert(cuts.end(), b.atoms().begin(), b.atoms().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // Both CDFs are constant on each [cuts[i], cuts[i+1]).
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    d += std::abs(a.cdf(cuts[i]) - b.cdf(cuts[i])) * (cuts[i + 1] - cuts[i]);
  }
  return d;
}

double parisi_moment(const DiscreteMeasure& nu, int p) {
  if (p < 1) throw DomainError("parisi_moment: p must be >= 1");
  double acc = 0.0;
  for (std::size_t l = 0; l < nu.size(); ++l) {
    acc += nu.weights()[l] * std::pow(nu.atoms()[l], 2.0 * p);
  }
  return acc;
}

double overlap_support_min(const DiscreteMeasure& nu) { return nu.atoms().front(); }

nlohmann::json to_json(const DiscreteMeasure& nu) {
  return nlohmann::json{{"atoms", nu.atoms()}, {"weights", nu.weights()}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.contains("weights")) {
    throw ConfigError("measure: expected {\"atoms\": [...], \"weights\": [...]}");
  }
  try {
    return DiscreteMeasure(j.at("atoms").get<std::vector<double>>(),
                           j.at("weights").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sampled functions on the half grid

SampledPhi::SampledPhi(double spacing, std::vector<double> values)
    : spacing_(spacing), values_(std::move(values)) {
  if (!(spacing_ > 0.0) || values_.size() < 4) {
    throw DomainError("SampledPhi: need spacing > 0 and at least 4 grid values");
  }
}

double SampledPhi::at_index(long j) const {
  if (j < 0) j = -j;
  const long last = static_cast<long>(values_.size()) - 1;
  if (j <= last) return values_[static_cast<std::size_t>(j)];
  return values_.back() + static_cast<double>(j - last) * spacing_;
}

double SampledPhi::operator()(double x) const {
  const double a = std::abs(x);
  const double edge = half_width();
  if (a >= edge) return values_.back() + (a - edge);
  const double s = a / spacing_;
  const long i = static_cast<long>(s);
  const double t = s - static_cast<double>(i);
  // Lagrange basis on nodes -1, 0, 1, 2.
  const double wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return wm1 * at_index(i - 1) + w0 * at_index(i) + w1 * at_index(i + 1) + w2 * at_index(i + 2);
}

PhiGrid default_phi_grid(const MixtureXi& xi, const GaussianField& h) {
  const double d1 = xi.derivs(1.0).first;
  PhiGrid g;
  g.half_width = std::abs(h.mean) + 12.0 + 10.0 * std::sqrt(h.std * h.std + d1);
  g.spacing = 1e-2;
  return g;
}

namespace {

// One interval of the recursion: nu([0,q]) = mass, xi' increases by variance.
struct Interval {
  double mass = 0.0;
  double variance = 0.0;
};

// Intervals for atoms q_1 <= ... <= q_k with cumulative masses m_1..m_k = 1:
// index 0 is [0, q_1) with mass 0, index l is [q_l, q_{l+1}) with mass m_l,
// and index k is [q_k, 1] with mass 1.
std::vector<Interval> make_intervals(const MixtureXi& xi, const double* atoms,
                                     const double* cumulative, std::size_t k) {
  std::vector<Interval> out(k + 1);
  double prev = xi.derivs(0.0).first;
  for (std::size_t l = 0; l <= k; ++l) {
    const double q = l < k ? atoms[l] : 1.0;
    const double d1 = xi.derivs(q).first;
    double var = d1 - prev;
    if (var < -1e-14) {
      throw DomainError("phi_solve: negative variance increment; xi' must be nondecreasing");
    }
    out[l].variance = var > 0.0 ? var : 0.0;
    out[l].mass = l == 0 ? 0.0 : cumulative[l - 1];
    prev = d1;
  }
  out[k].mass = 1.0;
  return out;
}

// Phi(x, q_k) = ln cosh x + variance / 2 on the top interval (mass 1).
struct TopLevel {
  double offset;
  double operator()(double x) const { return log_cosh(x) + offset; }
};

// (1/m) ln E exp(m L(x + s z)) or E L(x + s z) for m = 0.
template <class Level>
double smooth_at(const Level& level, double x, double mass, double s, const GaussHermiteRule& rule) {
  if (s == 0.0) return level(x);
  if (mass == 0.0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < rule.size(); ++j) acc += rule.weights[j] * level(x + s * rule.nodes[j]);
    return acc;
  }
  const double ref = level(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    acc += rule.weights[j] * std::expm1(mass * (level(x + s * rule.nodes[j]) - ref));
  }
  return ref + std::log1p(acc) / mass;
}

std::size_t grid_points(const PhiGrid& grid) {
  if (!(grid.spacing > 0.0) || !(grid.half_width > 0.0)) {
    throw DomainError("phi_solve: grid half-width and spacing must be positive");
  }
  const auto n = static_cast<std::size_t>(std::ceil(grid.half_width / grid.spacing - 1e-9)) + 1;
  return std::max<std::size_t>(n, 4);
}

void check_grid_reach(const PhiGrid& grid, double s, const GaussHermiteRule& rule) {
  if (s * rule.nodes.back() > grid.half_width) {
    throw DomainError("phi_solve: grid too narrow (half-width " + std::to_string(grid.half_width) +
                      " below the outermost quadrature offset " +
                      std::to_string(s * rule.nodes.back()) + ")");
  }
}

// Smoothing of an analytic level onto the grid.
template <class Level>
SampledPhi smooth_onto_grid(const Level& level, double mass, double s, std::size_t n, double d,
                            const GaussHermiteRule& rule) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = smooth_at(level, static_cast<double>(i) * d, mass, s, rule);
  return SampledPhi(d, std::move(out));
}

// Smoothing of a sampled level onto the same grid. Every node offset s z_j is
// a fixed shift in grid units, so each node has one interpolation stencil
// shared by all grid points; the source is padded by evenness on the left and
// by the linear asymptote on the right.
SampledPhi smooth_sampled(const SampledPhi& src, double mass, double s, const GaussHermiteRule& rule) {
  const std::size_t n = src.values().size();
  const double d = src.spacing();
  if (s == 0.0) return src;
  const std::size_t nodes = rule.size();
  std::vector<long> base(nodes);
  std::vector<std::array<double, 4>> lw(nodes);
  long reach = 0;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double u = s * rule.nodes[j] / d;
    const double fl = std::floor(u);
    const double t = u - fl;
    base[j] = static_cast<long>(fl) - 1;
    lw[j] = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
             -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
    reach = std::max(reach, std::abs(base[j]) + 4);
  }
  const auto last = static_cast<long>(n) - 1;
  const long pad = reach;
  std::vector<double> padded(n + 2 * static_cast<std::size_t>(pad));
  const std::vector<double>& v = src.values();
  for (long j = -pad; j <= last + pad; ++j) {
    double val;
    if (j < 0) {
      const long r = -j;
      val = r <= last ? v[static_cast<std::size_t>(r)] : v.back() + static_cast<double>(r - last) * d;
    } else if (j <= last) {
      val = v[static_cast<std::size_t>(j)];
    } else {
      val = v.back() + static_cast<double>(j - last) * d;
    }
    padded[static_cast<std::size_t>(j + pad)] = val;
  }
  std::vector<double> out(n);
  std::vector<double> acc(n, 0.0);
  const double* p = padded.data() + pad;
  if (mass == 0.0) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const double w = rule.weights[j];
      const auto& c = lw[j];
      const double* q = p + base[j];
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] += w * (c[0] * q[i] + c[1] * q[i + 1] + c[2] * q[i + 2] + c[3] * q[i + 3]);
      }
    }
    return SampledPhi(d, std::move(acc));
  }
  for (std::size_t j = 0; j < nodes; ++j) {
    const double w = rule.weights[j];
    const auto& c = lw[j];
    const double* q = p + base[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double val = c[0] * q[i] + c[1] * q[i + 1] + c[2] * q[i + 2] + c[3] * q[i + 3];
      acc[i] += w * std::expm1(mass * (val - v[i]));
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] + std::log1p(acc[i]) / mass;
  return SampledPhi(d, std::move(out));
}

// Tabulates Phi(., q_l) for l = k-1 down to `stop` (1-based atom index, so
// stop = 1 yields Phi(., q_1)). Requires k >= 2 and stop <= k - 1.
SampledPhi tabulate_levels(const std::vector<Interval>& iv, std::size_t k, std::size_t stop,
                           const PhiGrid& grid, const GaussHermiteRule& rule) {
  const std::size_t n = grid_points(grid);
  const TopLevel top{0.5 * iv[k].variance};
  double s = std::sqrt(iv[k - 1].variance);
  check_grid_reach(grid, s, rule);
  SampledPhi cur = smooth_onto_grid(top, iv[k - 1].mass, s, n, grid.spacing, rule);
  for (std::size_t l = k - 1; l > stop; --l) {
    s = std::sqrt(iv[l - 1].variance);
    check_grid_reach(grid, s, rule);
    cur = smooth_sampled(cur, iv[l - 1].mass, s, rule);
  }
  return cur;
}

double theta_terms(const MixtureXi& xi, const double* atoms, const double* cumulative, std::size_t k) {
  double acc = -0.5 * xi.theta(1.0);
  double prev = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    acc += 0.5 * (cumulative[l] - prev) * xi.theta(atoms[l]);
    prev = cumulative[l];
  }
  return acc;
}

struct RawMeasure {
  std::vector<double> atoms;       // nondecreasing
  std::vector<double> cumulative;  // nondecreasing, last = 1
};

PhiGrid resolve_grid(const MixtureXi& xi, const GaussianField& h, const ParisiSettings& st) {
  PhiGrid g = default_phi_grid(xi, h);
  g.spacing = st.spacing;
  if (st.half_width > 0.0) g.half_width = st.half_width;
  return g;
}

// Fast evaluation of E_h Phi(h, 0). Since Phi(., 0) = E_z Phi(. + z sqrt(D_0), q_1)
// and h is Gaussian, E_h Phi(h, 0) = E Phi(h.mean + Z sqrt(h.std^2 + D_0), q_1).
double field_expectation_fast(const MixtureXi& xi, const GaussianField& h, const RawMeasure& m,
                              const PhiGrid& grid, int order) {
  const std::size_t k = m.atoms.size();
  const auto iv = make_intervals(xi, m.atoms.data(), m.cumulative.data(), k);
  const GaussHermiteRule& rule = pruned_gauss_hermite_rule(order);
  const double spread = std::sqrt(h.std * h.std + iv[0].variance);
  const TopLevel top{0.5 * iv[k].variance};
  if (k == 1) return expect_gaussian(top, h.mean, spread, rule);
  if (k == 2) {
    const double s1 = std::sqrt(iv[1].variance);
    return expect_gaussian([&](double y) { return smooth_at(top, y, iv[1].mass, s1, rule); }, h.mean,
                           spread, rule);
  }
  const SampledPhi level2 = tabulate_levels(iv, k, 2, grid, rule);
  const double s1 = std::sqrt(iv[1].variance);
  return expect_gaussian([&](double y) { return smooth_at(level2, y, iv[1].mass, s1, rule); }, h.mean,
                         spread, rule);
}

double functional_raw(const MixtureXi& xi, const GaussianField& h, const RawMeasure& m,
                      const PhiGrid& grid, int order) {
  const double e = field_expectation_fast(xi, h, m, grid, order);
  const double v = kLn2 + e + theta_terms(xi, m.atoms.data(), m.cumulative.data(), m.atoms.size());
  if (!std::isfinite(v)) throw EvaluationError("parisi_functional: non-finite value");
  return v;
}

}  // namespace

SampledPhi phi_solve(const DiscreteMeasure& nu, const MixtureXi& xi, const PhiGrid& grid, int order) {
  const std::size_t k = nu.size();
  const auto iv = make_intervals(xi, nu.atoms().data(), nu.cumulative().data(), k);
  const GaussHermiteRule& rule = pruned_gauss_hermite_rule(order);
  const std::size_t n = grid_points(grid);
  const double s0 = std::sqrt(iv[0].variance);
  check_grid_reach(grid, s0, rule);
  if (k == 1) {
    const TopLevel top{0.5 * iv[1].variance};
    return smooth_onto_grid(top, 0.0, s0, n, grid.spacing, rule);
  }
  const SampledPhi level1 = tabulate_levels(iv, k, 1, grid, rule);
  return smooth_sampled(level1, 0.0, s0, rule);
}

double parisi_functional(const MixtureXi& xi, const GaussianField& h, const DiscreteMeasure& nu,
                         const ParisiSettings& settings) {
  const PhiGrid grid = resolve_grid(xi, h, settings);
  if (settings.method == ParisiMethod::grid) {
    const SampledPhi phi0 = phi_solve(nu, xi, grid, settings.order);
    const double e = expect_gaussian(phi0, h.mean, h.std, gauss_hermite_rule(settings.order));
    return kLn2 + e + theta_terms(xi, nu.atoms().data(), nu.cumulative().data(), nu.size());
  }
  RawMeasure m{nu.atoms(), nu.cumulative()};
  return functional_raw(xi, h, m, grid, settings.order);
}

// ---------------------------------------------------------------------------
// Minimization over k-atom measures

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

// Parameters: atoms q_0 <= ... <= q_{k-1} in [0,1], cumulative masses
// c_0 < ... < c_{k-2} in (0,1).
struct Candidate {
  std::vector<double> atoms;
  std::vector<double> masses;
  double value = std::numeric_limits<double>::infinity();
};

class Objective {
 public:
  Objective(const MixtureXi& xi, const GaussianField& h, const PhiGrid& grid, int order)
      : xi_(xi), h_(h), grid_(grid), order_(order) {}

  double operator()(const Candidate& c) {
    ++evaluations;
    RawMeasure m;
    m.atoms = c.atoms;
    m.cumulative = c.masses;
    m.cumulative.push_back(1.0);
    return functional_raw(xi_, h_, m, grid_, order_);
  }

  long evaluations = 0;

 private:
  const MixtureXi& xi_;
  const GaussianField& h_;
  PhiGrid grid_;
  int order_;
};

DiscreteMeasure to_measure(const Candidate& c, double merge_tol, double weight_floor) {
  std::vector<double> w(c.atoms.size());
  double prev = 0.0;
  for (std::size_t l = 0; l < c.atoms.size(); ++l) {
    const double cum = l < c.masses.size() ? c.masses[l] : 1.0;
    w[l] = cum - prev;
    prev = cum;
  }
  return DiscreteMeasure::merged(c.atoms, w, merge_tol, weight_floor);
}

// Coordinate-wise direct search: each coordinate is scanned at a few interior
// points of its feasible interval, then refined by golden-section search in
// the bracket around the best scan point.
void coordinate_search(Candidate& c, Objective& f, const MinimizeSettings& st) {
  const std::size_t k = c.atoms.size();
  const std::size_t dims = 2 * k - 1;
  constexpr int scan_points = 6;
  constexpr int max_passes = 500;
  c.value = f(c);
  for (int pass = 0; pass < max_passes; ++pass) {
    const double start = c.value;
    for (std::size_t dim = 0; dim < dims; ++dim) {
      double* coord;
      double lo;
      double hi;
      if (dim < k) {
        coord = &c.atoms[dim];
        lo = dim == 0 ? 0.0 : c.atoms[dim - 1];
        hi = dim + 1 == k ? 1.0 : c.atoms[dim + 1];
      } else {
        const std::size_t l = dim - k;
        coord = &c.masses[l];
        lo = (l == 0 ? 0.0 : c.masses[l - 1]) + st.weight_floor;
        hi = (l + 1 == c.masses.size() ? 1.0 : c.masses[l + 1]) - st.weight_floor;
      }
      if (!(hi - lo > st.coordinate_tolerance)) continue;
      const double orig = *coord;
      double best_x = orig;
      double best_v = c.value;
      auto eval_at = [&](double x) {
        *coord = x;
        return f(c);
      };
      const double step = (hi - lo) / (scan_points + 1);
      int best_t = -1;
      for (int t = 1; t <= scan_points; ++t) {
        const double x = lo + step * t;
        const double v = eval_at(x);
        if (v < best_v) {
          best_v = v;
          best_x = x;
          best_t = t;
        }
      }
      double a;
      double b;
      if (best_t < 0) {
        a = std::max(lo, orig - step);
        b = std::min(hi, orig + step);
      } else {
        a = std::max(lo, best_x - step);
        b = std::min(hi, best_x + step);
      }
      double x1 = b - kInvPhi * (b - a);
      double x2 = a + kInvPhi * (b - a);
      double f1 = eval_at(x1);
      double f2 = eval_at(x2);
      while (b - a > st.coordinate_tolerance) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - kInvPhi * (b - a);
          f1 = eval_at(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + kInvPhi * (b - a);
          f2 = eval_at(x2);
        }
      }
      if (f1 < best_v) {
        best_v = f1;
        best_x = x1;
      }
      if (f2 < best_v) {
        best_v = f2;
        best_x = x2;
      }
      *coord = best_x;
      c.value = best_v;
    }
    if (start - c.value < st.pass_tolerance) break;
  }
}

Candidate random_candidate(std::size_t k, StreamRng& rng, double weight_floor) {
  Candidate c;
  c.atoms.resize(k);
  for (double& q : c.atoms) q = rng.uniform();
  std::sort(c.atoms.begin(), c.atoms.end());
  c.masses.resize(k - 1);
  for (double& m : c.masses) m = weight_floor + (1.0 - 2.0 * weight_floor) * rng.uniform();
  std::sort(c.masses.begin(), c.masses.end());
  for (std::size_t l = 1; l < c.masses.size(); ++l) {
    c.masses[l] = std::max(c.masses[l], c.masses[l - 1] + weight_floor);
  }
  return c;
}

// k-atom candidate reproducing a (k-1)-atom optimum: the top atom is split
// into two coincident halves.
Candidate embed(const Candidate& prev, double weight_floor) {
  Candidate c = prev;
  c.atoms.push_back(prev.atoms.back());
  const double below = prev.masses.empty() ? 0.0 : prev.masses.back();
  c.masses.push_back(std::max(below + weight_floor, 0.5 * (below + 1.0)));
  return c;
}

}  // namespace

ParisiResult parisi_minimize(const MixtureXi& xi, const GaussianField& h, int k_max,
                             const MinimizeSettings& settings) {
  if (k_max < 1) throw DomainError("parisi_minimize: k_max must be >= 1");
  const PhiGrid grid = resolve_grid(xi, h, settings.functional);
  ParisiResult result;
  auto& diag = result.diagnostics;
  diag.half_width = grid.half_width;
  diag.spacing = grid.spacing;
  diag.order = settings.functional.order;
  diag.k_max = k_max;
  diag.restarts = settings.restarts;

  if (xi.is_zero()) {
    result.measure = DiscreteMeasure::dirac(0.0);
    result.value = parisi_functional(xi, h, result.measure, settings.functional);
    diag.identifiable = false;
    diag.atoms_used = 1;
    diag.k_reached = 1;
    diag.level_values = {result.value};
    diag.evaluations = 1;
    return result;
  }

  Objective f(xi, h, grid, settings.functional.order);
  Candidate best_prev;
  std::vector<Candidate> best_runs;
  for (int k = 1; k <= k_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    std::vector<Candidate> runs(static_cast<std::size_t>(std::max(1, settings.restarts)));
    for (std::size_t r = 0; r < runs.size(); ++r) {
      StreamRng rng(settings.seed, {StreamPurpose::parisi_restart, static_cast<std::uint32_t>(k),
                                    static_cast<std::uint32_t>(r)});
      runs[r] = (r == 0 && k > 1) ? embed(best_prev, settings.weight_floor)
                                  : random_candidate(ku, rng, settings.weight_floor);
    }
    // Restarts are independent; results are combined in index order below.
    long evals = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : evals)
    for (std::size_t r = 0; r < runs.size(); ++r) {
      Objective local(xi, h, grid, settings.functional.order);
      coordinate_search(runs[r], local, settings);
      evals += local.evaluations;
    }
    f.evaluations += evals;
    std::size_t winner = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (runs[r].value < runs[winner].value) winner = r;
    }
    diag.level_values.push_back(runs[winner].value);
    diag.k_reached = k;
    if (k > 1 && best_prev.value - runs[winner].value < settings.level_tolerance) break;
    best_prev = runs[winner];
    best_runs = std::move(runs);
  }

  result.value = best_prev.value;
  result.measure = to_measure(best_prev, settings.merge_tol, 10.0 * settings.weight_floor);
  diag.atoms_used = static_cast<int>(result.measure.size());
  diag.evaluations = f.evaluations;
  for (const Candidate& c : best_runs) {
    if (std::abs(c.value - best_prev.value) < 1e-9 &&
        measure_distance(to_measure(c, settings.merge_tol, 10.0 * settings.weight_floor),
                         result.measure) > 1e-3) {
      ++diag.near_ties;
    }
  }
  return result;
}

double sk_free_energy(const MixtureXi& xi, double shift, const GaussianField& h, int k_max) {
  return parisi_minimize(xi, h.shifted(shift), k_max).value;
}

double sk_beta_p_derivative(const MixtureXi& xi, const GaussianField& h, int p, int k_max) {
  if (p < 1 || p > xi.max_order()) {
    throw DomainError("sk_beta_p_derivative: p must be between 1 and the mixture length");
  }
  const double bp = xi.coeff(p);
  if (bp == 0.0) return 0.0;
  const ParisiResult r = parisi_minimize(xi, h, k_max);
  return bp * (1.0 - parisi_moment(r.measure, p));
}

}  // namespace skfi
