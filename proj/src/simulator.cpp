#include "skfi/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>

#include "skfi/errors.hpp"

namespace skfi {

namespace {

std::size_t idx2(int n, int i, int j) { return static_cast<std::size_t>(i) * n + j; }

std::size_t idx4(int n, int i, int j, int k, int l) {
  return ((static_cast<std::size_t>(i) * n + j) * n + k) * n + l;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_spins(const SpinConfig& s, int n, const char* op) {
  if (static_cast<int>(s.size()) != n) throw DomainError(std::string(op) + ": size mismatch");
  for (int v : s) {
    if (v != 1 && v != -1) throw DomainError(std::string(op) + ": spins must be +1 or -1");
  }
}

double psi(PsiKind k, double x) {
  switch (k) {
    case PsiKind::x: return x;
    case PsiKind::x2: return x * x;
    case PsiKind::abs: return std::abs(x);
  }
  return x;
}

// In-place Walsh-Hadamard transform (unnormalized).
void fwht(std::vector<double>& a) {
  const std::size_t n = a.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j];
        const double y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
    }
  }
}

}  // namespace

DisorderSample sample_disorder(int n, const MixtureXi& xi, const GaussianField& h,
                               std::uint64_t root_seed, std::uint32_t index, bool force_g4) {
  if (n < 1) throw DomainError("sample_disorder: n must be >= 1");
  for (int p = 3; p <= xi.max_order(); ++p) {
    if (xi.coeff(p) != 0.0) {
      throw DomainError("sample_disorder: only p = 1, 2 can be simulated (beta_" +
                        std::to_string(p) + " != 0)");
    }
  }
  const bool quartic = force_g4 || xi.coeff(2) != 0.0;
  if (quartic && n > kMaxQuarticN) {
    throw DomainError("sample_disorder: n > " + std::to_string(kMaxQuarticN) +
                      " with a quartic term exceeds the memory guard");
  }
  DisorderSample d;
  d.n = n;
  d.xi = xi;
  d.root_seed = root_seed;
  d.index = index;

  StreamRng r2(root_seed, {StreamPurpose::disorder, index, 0});
  d.g2.resize(static_cast<std::size_t>(n) * n);
  for (double& g : d.g2) g = r2.normal();

  if (quartic) {
    StreamRng r4(root_seed, {StreamPurpose::disorder, index, 1});
    d.g4.resize(static_cast<std::size_t>(n) * n * n * n);
    for (double& g : d.g4) g = r4.normal();
  }

  StreamRng rh(root_seed, {StreamPurpose::disorder, index, 2});
  d.fields.resize(static_cast<std::size_t>(n));
  for (double& f : d.fields) f = h.degenerate() ? h.mean : h.mean + h.std * rh.normal();
  return d;
}

double magnetization(const SpinConfig& s) {
  if (s.empty()) throw DomainError("magnetization: empty configuration");
  long sum = 0;
  for (int v : s) sum += v;
  return static_cast<double>(sum) / static_cast<double>(s.size());
}

double overlap(const SpinConfig& a, const SpinConfig& b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("overlap: size mismatch");
  long sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return static_cast<double>(sum) / static_cast<double>(a.size());
}

double hamiltonian(const DisorderSample& d, const SpinConfig& sigma, double beta) {
  const int n = d.n;
  check_spins(sigma, n, "hamiltonian");
  const double b1 = d.xi.coeff(1);
  const double b2 = d.xi.coeff(2);
  if (b2 != 0.0 && !d.has_g4()) throw DomainError("hamiltonian: beta_2 != 0 but no g4 sampled");

  double s = 0.0;
  for (int v : sigma) s += v;
  double h = 0.5 * beta * s * s / n;

  double two = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) two += d.g2[idx2(n, i, j)] * sigma[i] * sigma[j];
  h += b1 / std::sqrt(static_cast<double>(n)) * two;

  if (b2 != 0.0) {
    double four = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            four += d.g4[idx4(n, i, j, k, l)] * sigma[i] * sigma[j] * sigma[k] * sigma[l];
    h += b2 / std::pow(static_cast<double>(n), 1.5) * four;
  }

  for (int i = 0; i < n; ++i) h += d.fields[i] * sigma[i];
  return h;
}

Couplings effective_couplings(const DisorderSample& d, double beta) {
  const int n = d.n;
  const double b1 = d.xi.coeff(1);
  const double b2 = d.xi.coeff(2);
  if (b2 != 0.0 && !d.has_g4()) {
    throw DomainError("effective_couplings: beta_2 != 0 but no g4 sampled");
  }
  Couplings c;
  c.n = n;
  c.beta = beta;
  c.fields = d.fields;
  c.pair.assign(static_cast<std::size_t>(n) * n, 0.0);

  // Upper-triangle accumulation, symmetrized at the end.
  const double c1 = b1 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    c.constant += c1 * d.g2[idx2(n, i, i)];
    for (int j = i + 1; j < n; ++j) {
      c.pair[idx2(n, i, j)] += c1 * (d.g2[idx2(n, i, j)] + d.g2[idx2(n, j, i)]);
    }
  }

  if (b2 != 0.0) {
    // Each ordered tuple reduces to the product over indices of odd
    // multiplicity: the XOR of the index bits.
    const double c2 = b2 / std::pow(static_cast<double>(n), 1.5);
    c.quartic.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const std::uint32_t mask = (1u << i) ^ (1u << j) ^ (1u << k) ^ (1u << l);
            const double g = c2 * d.g4[idx4(n, i, j, k, l)];
            int ids[4] = {0, 0, 0, 0};
            int m = 0;
            for (std::uint32_t b = mask; b != 0; b &= b - 1) ids[m++] = std::countr_zero(b);
            if (m == 0) {
              c.constant += g;
            } else if (m == 2) {
              c.pair[idx2(n, ids[0], ids[1])] += g;
            } else {
              c.quartic[idx4(n, ids[0], ids[1], ids[2], ids[3])] += g;
            }
          }
    // Copy each sorted entry to all 24 orderings.
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int e = b + 1; e < n; ++e)
          for (int f = e + 1; f < n; ++f) {
            int p[4] = {a, b, e, f};
            const double v = c.quartic[idx4(n, a, b, e, f)];
            std::sort(p, p + 4);
            do {
              c.quartic[idx4(n, p[0], p[1], p[2], p[3])] = v;
            } while (std::next_permutation(p, p + 4));
          }
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) c.pair[idx2(n, j, i)] = c.pair[idx2(n, i, j)];
  return c;
}

double Couplings::quartic_field(const SpinConfig& s, int a) const {
  if (quartic.empty()) return 0.0;
  double f = 0.0;
  for (int b = 0; b < n; ++b) {
    if (b == a) continue;
    for (int e = b + 1; e < n; ++e) {
      if (e == a) continue;
      double inner = 0.0;
      const double* row = &quartic[idx4(n, a, b, e, 0)];
      for (int g = e + 1; g < n; ++g) inner += row[g] * s[g];
      f += inner * s[b] * s[e];
    }
  }
  return f;
}

double Couplings::energy(const SpinConfig& s) const {
  check_spins(s, n, "Couplings::energy");
  double sum = 0.0;
  for (int v : s) sum += v;
  double h = constant + 0.5 * beta * sum * sum / n;
  for (int a = 0; a < n; ++a) {
    h += fields[a] * s[a];
    double row = 0.0;
    for (int b = a + 1; b < n; ++b) row += pair[idx2(n, a, b)] * s[b];
    h += row * s[a];
  }
  if (!quartic.empty()) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int e = b + 1; e < n; ++e) {
          double inner = 0.0;
          for (int g = e + 1; g < n; ++g) inner += quartic[idx4(n, a, b, e, g)] * s[g];
          h += inner * s[a] * s[b] * s[e];
        }
  }
  return h;
}

double Couplings::local_field(const SpinConfig& s, int a) const {
  double sum = 0.0;
  for (int v : s) sum += v;
  double phi = fields[a] + beta / n * (sum - s[a]);
  for (int b = 0; b < n; ++b) phi += pair[idx2(n, a, b)] * s[b];
  return phi + quartic_field(s, a);
}

double heat_bath_up_probability(double phi) { return 1.0 / (1.0 + std::exp(-2.0 * phi)); }

double ExactResult::overlap_moment(int p) const {
  const int n = static_cast<int>(overlap_pmf.size()) - 1;
  double m = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double r = 1.0 - 2.0 * k / n;
    m += overlap_pmf[k] * std::pow(r, 2 * p);
  }
  return m;
}

double ExactResult::m_window(double lo, double hi) const {
  const int n = static_cast<int>(m_pmf.size()) - 1;
  double p = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double m = -1.0 + 2.0 * k / n;
    if (m >= lo - 1e-12 && m <= hi + 1e-12) p += m_pmf[k];
  }
  return p;
}

ExactResult enumerate_exact(const DisorderSample& d, double beta, bool correlations) {
  const int n = d.n;
  const int limit = d.has_g4() ? kMaxEnumerateQuarticN : kMaxEnumerateN;
  if (n > limit) {
    throw DomainError("enumerate_exact: n = " + std::to_string(n) + " exceeds the limit " +
                      std::to_string(limit));
  }
  const Couplings c = effective_couplings(d, beta);
  const std::size_t states = std::size_t{1} << n;

  // Bit i of the state index set <=> sigma_i = +1.
  SpinConfig s(static_cast<std::size_t>(n), -1);
  int sum = -n;
  std::vector<double> field(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) field[a] += c.pair[idx2(n, a, b)] * s[b];

  std::vector<double> energy(states);
  double h = c.energy(s);
  energy[0] = h;
  std::size_t x = 0;
  for (std::size_t i = 1; i < states; ++i) {
    const int a = std::countr_zero(i);
    const double phi = c.fields[a] + beta / n * (sum - s[a]) + field[a] + c.quartic_field(s, a);
    h -= 2.0 * s[a] * phi;
    s[a] = -s[a];
    sum += 2 * s[a];
    const double delta = 2.0 * s[a];
    for (int b = 0; b < n; ++b) field[b] += c.pair[idx2(n, b, a)] * delta;
    x ^= std::size_t{1} << a;
    if ((i & 4095u) == 0) h = c.energy(s);
    energy[x] = h;
  }

  const double emax = *std::max_element(energy.begin(), energy.end());
  std::vector<double> prob(states);
  double z = 0.0;
  for (std::size_t y = 0; y < states; ++y) {
    prob[y] = std::exp(energy[y] - emax);
    z += prob[y];
  }
  ExactResult r;
  r.log_z = emax + std::log(z);
  r.m_pmf.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t y = 0; y < states; ++y) {
    prob[y] /= z;
    r.m_pmf[std::popcount(y)] += prob[y];
  }
  for (int k = 0; k <= n; ++k) {
    const double m = -1.0 + 2.0 * k / n;
    r.mean_m += r.m_pmf[k] * m;
    r.mean_m2 += r.m_pmf[k] * m * m;
    r.mean_abs_m += r.m_pmf[k] * std::abs(m);
  }

  if (correlations) {
    r.correlation.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t y = 0; y < states; ++y) {
      for (int i = 0; i < n; ++i) {
        const int si = (y >> i) & 1u ? 1 : -1;
        for (int j = i + 1; j < n; ++j) {
          const int sj = (y >> j) & 1u ? 1 : -1;
          r.correlation[idx2(n, i, j)] += prob[y] * si * sj;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      r.correlation[idx2(n, i, i)] = 1.0;
      for (int j = i + 1; j < n; ++j) r.correlation[idx2(n, j, i)] = r.correlation[idx2(n, i, j)];
    }
  }

  // A(t) = sum_y P(y) P(y ^ t); R12 = 1 - 2 popcount(t) / n.
  std::vector<double> a = prob;
  fwht(a);
  for (double& v : a) v *= v;
  fwht(a);
  r.overlap_pmf.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double scale = 1.0 / static_cast<double>(states);
  for (std::size_t t = 0; t < states; ++t) r.overlap_pmf[std::popcount(t)] += a[t] * scale;
  r.r2 = r.overlap_moment(1);
  r.r4 = r.overlap_moment(2);
  return r;
}

Chain::Chain(const Couplings& c, SpinConfig start, StreamRng spin_rng, StreamRng order_rng)
    : c_(&c),
      spins_(std::move(start)),
      spin_rng_(spin_rng),
      order_rng_(order_rng) {
  check_spins(spins_, c.n, "Chain");
  order_.resize(static_cast<std::size_t>(c.n));
  for (int i = 0; i < c.n; ++i) order_[i] = i;
  resync();
}

double Chain::magnetization() const {
  return static_cast<double>(sum_) / static_cast<double>(c_->n);
}

void Chain::resync() {
  const int n = c_->n;
  sum_ = 0;
  for (int v : spins_) sum_ += v;
  pair_field_.assign(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) pair_field_[a] += c_->pair[idx2(n, a, b)] * spins_[b];
}

void Chain::flip(int a) {
  const int n = c_->n;
  spins_[a] = -spins_[a];
  sum_ += 2 * spins_[a];
  const double delta = 2.0 * spins_[a];
  const double* col = &c_->pair[idx2(n, a, 0)];  // symmetric: row a == column a
  for (int b = 0; b < n; ++b) pair_field_[b] += col[b] * delta;
}

void Chain::sweep() {
  const int n = c_->n;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(order_rng_.below(static_cast<std::uint32_t>(i + 1)));
    std::swap(order_[i], order_[j]);
  }
  const double cw = c_->beta / n;
  for (int a : order_) {
    const double phi = c_->fields[a] + cw * (sum_ - spins_[a]) + pair_field_[a] +
                       c_->quartic_field(spins_, a);
    const int target = spin_rng_.uniform() < heat_bath_up_probability(phi) ? 1 : -1;
    if (target != spins_[a]) flip(a);
  }
}

ReplicaSet make_replicas(const DisorderSample& d, double beta, int n_replicas) {
  if (n_replicas < 1) throw DomainError("make_replicas: need at least one replica");
  ReplicaSet set{d, effective_couplings(d, beta), {}};
  set.chains.reserve(static_cast<std::size_t>(n_replicas));
  for (int r = 0; r < n_replicas; ++r) {
    const auto sub = static_cast<std::uint32_t>(r);
    StreamRng spin(d.root_seed, {StreamPurpose::chain, d.index, sub});
    SpinConfig start(static_cast<std::size_t>(d.n));
    for (int& v : start) v = spin.below(2) == 0 ? -1 : 1;
    set.chains.emplace_back(set.couplings, std::move(start), spin,
                            StreamRng(d.root_seed, {StreamPurpose::site_order, d.index, sub}));
  }
  return set;
}

void heat_bath_sweep(ReplicaSet& state, long sweeps) {
  for (Chain& ch : state.chains) {
    for (long t = 0; t < sweeps; ++t) ch.sweep();
    ch.resync();
  }
}

bool replica_inequality_check(const std::vector<SpinConfig>& replicas) {
  if (replicas.empty()) throw DomainError("replica_inequality_check: no replicas");
  const std::size_t n = replicas.front().size();
  for (const SpinConfig& r : replicas) check_spins(r, static_cast<int>(n), "replica_inequality_check");
  // (sum_l |M_l|)^2 <= N^2 n + N sum_{l != l'} |Q_{l,l'}| with M = N m, Q = N R.
  const auto k = static_cast<std::int64_t>(replicas.size());
  const auto bigN = static_cast<std::int64_t>(n);
  std::int64_t abs_m = 0;
  std::int64_t abs_q = 0;
  for (std::size_t l = 0; l < replicas.size(); ++l) {
    std::int64_t m = 0;
    for (int v : replicas[l]) m += v;
    abs_m += m < 0 ? -m : m;
    for (std::size_t l2 = l + 1; l2 < replicas.size(); ++l2) {
      std::int64_t q = 0;
      for (std::size_t i = 0; i < n; ++i) q += replicas[l][i] * replicas[l2][i];
      abs_q += 2 * (q < 0 ? -q : q);
    }
  }
  return abs_m * abs_m <= bigN * bigN * k + bigN * abs_q;
}

std::string to_string(PsiKind k) {
  switch (k) {
    case PsiKind::x: return "x";
    case PsiKind::x2: return "x2";
    case PsiKind::abs: return "abs";
  }
  return "x";
}

PsiKind psi_from_string(const std::string& s) {
  if (s == "x") return PsiKind::x;
  if (s == "x2") return PsiKind::x2;
  if (s == "abs") return PsiKind::abs;
  throw ConfigError("unknown psi '" + s + "' (expected x, x2 or abs)");
}

void validate(const SimulationParams& p) {
  if (p.n < 1) throw ConfigError("simulation: n must be >= 1");
  if (p.n_disorder < 1) throw ConfigError("simulation: n_disorder must be >= 1");
  if (p.sweeps < 0 || p.burnin < 0) throw ConfigError("simulation: sweeps and burnin must be >= 0");
  if (p.sweeps > 0 && p.n_replicas < 1) throw ConfigError("simulation: n_replicas must be >= 1");
  if (p.cdf_bins < 0) throw ConfigError("simulation: cdf_bins must be >= 0");
  if (!(p.eps >= 0.0) || !(p.mu_eps >= 0.0)) throw ConfigError("simulation: eps must be >= 0");
  if (p.gg_level < 2) throw ConfigError("simulation: gg_level must be >= 2");
  if (p.batches < 2) throw ConfigError("simulation: batches must be >= 2");
  for (const auto& [lo, hi] : p.windows) {
    if (!(lo <= hi)) throw ConfigError("simulation: window lower bound exceeds upper bound");
  }
  for (int q = 3; q <= p.temp.xi.max_order(); ++q) {
    if (p.temp.xi.coeff(q) != 0.0) {
      throw ConfigError("simulation: only p = 1, 2 coefficients can be simulated");
    }
  }
  if (p.temp.xi.coeff(2) != 0.0 && p.n > kMaxQuarticN) {
    throw ConfigError("simulation: n > " + std::to_string(kMaxQuarticN) +
                      " with beta_2 != 0; reduce n or set beta_2 = 0");
  }
}

namespace {

std::vector<std::string> gg_member_names(const SimulationParams& p) {
  std::vector<std::string> names{"one"};
  for (double t : p.gg_thresholds) names.push_back("t" + fmt(t));
  return names;
}

// Ordered tuples of `len` distinct values from [0, r).
std::vector<std::vector<int>> ordered_tuples(int r, int len) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::vector<bool> used(static_cast<std::size_t>(r), false);
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(cur.size()) == len) {
      out.push_back(cur);
      return;
    }
    for (int i = 0; i < r; ++i) {
      if (used[i]) continue;
      used[i] = true;
      cur.push_back(i);
      self(self);
      cur.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
  return out;
}

class SeriesSet {
 public:
  std::vector<double>& operator[](const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, series_.size()).first;
      series_.emplace_back();
    }
    return series_[it->second];
  }
  const std::map<std::string, std::size_t>& index() const { return index_; }
  const std::vector<double>& at(std::size_t i) const { return series_[i]; }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> series_;
};

double mean_of(const std::vector<double>& v) {
  ExactSum s;
  for (double x : v) s.add(x);
  return v.empty() ? 0.0 : s.value() / static_cast<double>(v.size());
}

DisorderRecord run_disorder(const SimulationParams& p, std::uint32_t index) {
  DisorderRecord rec;
  rec.index = index;
  const DisorderSample d = sample_disorder(p.n, p.temp.xi, p.h, p.root_seed, index);
  const int n = p.n;
  const double nd = n;

  if (p.exact) {
    const int limit = d.has_g4() ? kMaxEnumerateQuarticN : kMaxEnumerateN;
    if (n <= limit) {
      ExactResult ex = enumerate_exact(d, p.temp.beta);
      rec.values["exact_log_z_per_n"] = ex.log_z / nd;
      rec.values["exact_m"] = ex.mean_m;
      rec.values["exact_m2"] = ex.mean_m2;
      rec.values["exact_abs_m"] = ex.mean_abs_m;
      rec.values["exact_R2"] = ex.r2;
      rec.values["exact_R4"] = ex.r4;
      if (p.mu_target) {
        rec.values["exact_mu_window"] = ex.m_window(*p.mu_target - p.mu_eps, *p.mu_target + p.mu_eps);
      }
      rec.exact = std::move(ex);
    }
  }
  if (p.sweeps == 0) return rec;

  ReplicaSet set = make_replicas(d, p.temp.beta, p.n_replicas);
  std::optional<Chain> cold;
  if (p.mixing_diagnostic) {
    const auto sub = static_cast<std::uint32_t>(p.n_replicas);
    cold.emplace(set.couplings, SpinConfig(static_cast<std::size_t>(n), 1),
                 StreamRng(p.root_seed, {StreamPurpose::chain, index, sub}),
                 StreamRng(p.root_seed, {StreamPurpose::site_order, index, sub}));
  }
  for (Chain& ch : set.chains)
    for (long t = 0; t < p.burnin; ++t) ch.sweep();
  if (cold)
    for (long t = 0; t < p.burnin; ++t) cold->sweep();

  const int rr = p.n_replicas;
  const auto pairs = ordered_tuples(rr, 2);
  const auto triples = rr >= 3 ? ordered_tuples(rr, 3) : std::vector<std::vector<int>>{};
  const int level = p.gg_level;
  const auto gg_tuples = rr >= level + 1 ? ordered_tuples(rr, level + 1)
                                         : std::vector<std::vector<int>>{};
  const auto members = gg_member_names(p);

  std::vector<std::string> window_names;
  for (const auto& [lo, hi] : p.windows) window_names.push_back("window[" + fmt(lo) + ":" + fmt(hi) + "]");
  std::vector<std::string> cut_names;
  for (double c : p.overlap_cuts) cut_names.push_back("R_le[" + fmt(c) + "]");
  std::vector<double> cdf_t;
  std::vector<std::string> cdf_names;
  for (int k = 1; k < p.cdf_bins; ++k) {
    cdf_t.push_back(-1.0 + 2.0 * k / p.cdf_bins);
    cdf_names.push_back("R_cdf[" + fmt(cdf_t.back()) + "]");
  }

  SeriesSet series;
  for (auto* name : {"m", "m2", "abs_m", "R", "R2", "R4", "abs_R"}) series[name].reserve(static_cast<std::size_t>(p.sweeps));

  std::vector<int> msum(static_cast<std::size_t>(rr));
  std::vector<int> q(static_cast<std::size_t>(rr) * rr);
  std::vector<SpinConfig> snapshot(static_cast<std::size_t>(rr));
  std::vector<double> gg_f(members.size()), gg_a(members.size()), gg_b(members.size());
  std::vector<double> cold_m, cold_m2, hot_m, hot_m2;

  for (long t = 0; t < p.sweeps; ++t) {
    for (Chain& ch : set.chains) ch.sweep();
    if (cold) cold->sweep();
    if (t % 1024 == 1023) {
      for (Chain& ch : set.chains) ch.resync();
      if (cold) cold->resync();
    }

    for (int a = 0; a < rr; ++a) msum[a] = set.chains[a].sum();
    for (int a = 0; a < rr; ++a) {
      const SpinConfig& sa = set.chains[a].spins();
      for (int b = a + 1; b < rr; ++b) {
        const SpinConfig& sb = set.chains[b].spins();
        int acc = 0;
        for (int i = 0; i < n; ++i) acc += sa[i] * sb[i];
        q[a * rr + b] = q[b * rr + a] = acc;
      }
      q[a * rr + a] = n;
    }
    auto R = [&](int a, int b) { return q[a * rr + b] / nd; };

    double m1 = 0, m2 = 0, am = 0;
    std::vector<double> win(p.windows.size(), 0.0);
    double mu_win = 0.0;
    for (int a = 0; a < rr; ++a) {
      const double m = msum[a] / nd;
      m1 += m;
      m2 += m * m;
      am += std::abs(m);
      for (std::size_t w = 0; w < p.windows.size(); ++w) {
        if (m >= p.windows[w].first - 1e-12 && m <= p.windows[w].second + 1e-12) win[w] += 1.0;
      }
      if (p.mu_target && std::abs(m - *p.mu_target) <= p.mu_eps + 1e-12) mu_win += 1.0;
    }
    series["m"].push_back(m1 / rr);
    series["m2"].push_back(m2 / rr);
    series["abs_m"].push_back(am / rr);
    for (std::size_t w = 0; w < win.size(); ++w) series[window_names[w]].push_back(win[w] / rr);
    if (p.mu_target) series["mu_window"].push_back(mu_win / rr);

    if (rr >= 2) {
      double r1 = 0, r2 = 0, r4 = 0, ar = 0;
      std::vector<double> cut(p.overlap_cuts.size(), 0.0), cdf(cdf_t.size(), 0.0);
      int np = 0;
      for (int a = 0; a < rr; ++a)
        for (int b = a + 1; b < rr; ++b) {
          const double r = R(a, b);
          r1 += r;
          r2 += r * r;
          r4 += r * r * r * r;
          ar += std::abs(r);
          for (std::size_t k = 0; k < cut.size(); ++k)
            if (q[a * rr + b] <= p.overlap_cuts[k] * nd + 1e-9) cut[k] += 1.0;
          for (std::size_t k = 0; k < cdf.size(); ++k)
            if (q[a * rr + b] <= cdf_t[k] * nd + 1e-9) cdf[k] += 1.0;
          ++np;
        }
      series["R"].push_back(r1 / np);
      series["R2"].push_back(r2 / np);
      series["R4"].push_back(r4 / np);
      series["abs_R"].push_back(ar / np);
      for (std::size_t k = 0; k < cut.size(); ++k) series[cut_names[k]].push_back(cut[k] / np);
      for (std::size_t k = 0; k < cdf.size(); ++k) series[cdf_names[k]].push_back(cdf[k] / np);
    }

    if (!triples.empty()) {
      double ultra = 0, magov = 0;
      for (const auto& tr : triples) {
        const double r12 = R(tr[0], tr[1]);
        if (r12 < std::min(R(tr[0], tr[2]), R(tr[1], tr[2])) - p.eps - 1e-12) ultra += 1.0;
        const double m3 = msum[tr[2]] / nd;
        if (m3 * m3 > std::abs(r12) + p.eps + 1e-12) magov += 1.0;
      }
      series["ultrametric_violation"].push_back(ultra / static_cast<double>(triples.size()));
      series["mag_overlap_violation"].push_back(magov / static_cast<double>(triples.size()));
    }

    if (!gg_tuples.empty()) {
      std::fill(gg_f.begin(), gg_f.end(), 0.0);
      std::fill(gg_a.begin(), gg_a.end(), 0.0);
      std::fill(gg_b.begin(), gg_b.end(), 0.0);
      double psi12 = 0.0;
      for (const auto& tu : gg_tuples) {
        const double p12 = psi(p.gg_psi, R(tu[0], tu[1]));
        const double plast = psi(p.gg_psi, R(tu[0], tu[level]));
        double pmid = 0.0;
        for (int l = 1; l < level; ++l) pmid += psi(p.gg_psi, R(tu[0], tu[l]));
        psi12 += p12;
        for (std::size_t k = 0; k < members.size(); ++k) {
          double f = 1.0;
          if (k > 0) {
            const double th = p.gg_thresholds[k - 1];
            for (int a = 0; a < level; ++a)
              for (int b = a + 1; b < level; ++b) f *= R(tu[a], tu[b]) > th + 1e-12 ? 1.0 : -1.0;
          }
          gg_f[k] += f;
          gg_a[k] += plast * f;
          gg_b[k] += pmid * f;
        }
      }
      const double nt = static_cast<double>(gg_tuples.size());
      series["gg_psi12"].push_back(psi12 / nt);
      for (std::size_t k = 0; k < members.size(); ++k) {
        series["gg_f[" + members[k] + "]"].push_back(gg_f[k] / nt);
        series["gg_A[" + members[k] + "]"].push_back(gg_a[k] / nt);
        series["gg_B[" + members[k] + "]"].push_back(gg_b[k] / nt);
      }
    }

    for (int a = 0; a < rr; ++a) snapshot[a] = set.chains[a].spins();
    ++rec.inequality_checks;
    if (!replica_inequality_check(snapshot)) ++rec.inequality_violations;

    if (cold) {
      const double mc = cold->magnetization();
      const double mh = set.chains[0].magnetization();
      cold_m.push_back(mc);
      cold_m2.push_back(mc * mc);
      hot_m.push_back(mh);
      hot_m2.push_back(mh * mh);
    }
  }

  for (const auto& [name, i] : series.index()) {
    const auto& v = series.at(i);
    rec.values[name] = mean_of(v);
    rec.stderrs[name] = batch_means_stderr(v, p.batches);
  }
  if (cold) {
    rec.values["mixing_gap_m"] = std::abs(mean_of(cold_m) - mean_of(hot_m));
    rec.values["mixing_gap_m2"] = std::abs(mean_of(cold_m2) - mean_of(hot_m2));
  }
  rec.values["replica_inequality_violations"] = static_cast<double>(rec.inequality_violations);
  return rec;
}

}  // namespace

SimulationResult estimate_observables(const SimulationParams& params) {
  validate(params);
  SimulationResult out;
  out.params = params;
  out.disorders.resize(static_cast<std::size_t>(params.n_disorder));
  std::vector<std::exception_ptr> errors(out.disorders.size());
  const long nd = params.n_disorder;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < nd; ++i) {
    try {
      out.disorders[static_cast<std::size_t>(i)] = run_disorder(params, static_cast<std::uint32_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (const DisorderRecord& rec : out.disorders) {
    for (const auto& [name, v] : rec.values) out.acc.add(name, v);
    out.inequality_checks += rec.inequality_checks;
    out.inequality_violations += rec.inequality_violations;
  }
  if (params.sweeps > 0 && params.n_replicas >= params.gg_level + 1) out.gg = gg_residual(out);
  return out;
}

GgResidual gg_residual(const SimulationResult& result) {
  const SimulationParams& p = result.params;
  if (!result.acc.has("gg_psi12")) {
    throw ConfigError("gg_residual: needs n_replicas >= gg_level + 1 and sweeps > 0");
  }
  const double level = p.gg_level;
  GgResidual g;
  g.members = gg_member_names(p);
  const double psi_mean = result.acc.mean("gg_psi12");
  double worst = -1.0;
  for (const std::string& m : g.members) {
    const std::string fk = "gg_f[" + m + "]", ak = "gg_A[" + m + "]", bk = "gg_B[" + m + "]";
    const double f_mean = result.acc.mean(fk);
    const double r = level * result.acc.mean(ak) - psi_mean * f_mean - result.acc.mean(bk);
    g.per_member.push_back(r);
    if (std::abs(r) > worst) {
      worst = std::abs(r);
      MomentAccumulator lin;
      for (const DisorderRecord& rec : result.disorders) {
        const auto& v = rec.values;
        lin.add("r", level * v.at(ak) - psi_mean * v.at(fk) - f_mean * v.at("gg_psi12") - v.at(bk));
      }
      g.residual = worst;
      g.stderr = lin.stderr_of_mean("r");
    }
  }
  return g;
}

DerivativeCheck finite_n_derivative_check(const SimulationParams& params, int p, double epsilon) {
  validate(params);
  if (p != 1 && p != 2) throw ConfigError("finite_n_derivative_check: p must be 1 or 2");
  if (!(epsilon > 0.0)) throw ConfigError("finite_n_derivative_check: epsilon must be positive");
  const double bp = params.temp.xi.coeff(p);
  const MixtureXi up = params.temp.xi.with_coeff(p, bp + epsilon);
  const MixtureXi down = params.temp.xi.with_coeff(p, bp - epsilon);
  const long nd = params.n_disorder;
  std::vector<double> lhs(static_cast<std::size_t>(nd)), rhs(static_cast<std::size_t>(nd));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nd));
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < nd; ++i) {
    try {
      DisorderSample d = sample_disorder(params.n, params.temp.xi, params.h, params.root_seed,
                                         static_cast<std::uint32_t>(i), p == 2);
      const ExactResult mid = enumerate_exact(d, params.temp.beta);
      d.xi = up;
      const double lz_up = enumerate_exact(d, params.temp.beta).log_z;
      d.xi = down;
      const double lz_down = enumerate_exact(d, params.temp.beta).log_z;
      lhs[static_cast<std::size_t>(i)] = (lz_up - lz_down) / (2.0 * epsilon * params.n);
      rhs[static_cast<std::size_t>(i)] = bp * (1.0 - mid.overlap_moment(p));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  MomentAccumulator acc;
  for (long i = 0; i < nd; ++i) {
    acc.add("lhs", lhs[static_cast<std::size_t>(i)]);
    acc.add("rhs", rhs[static_cast<std::size_t>(i)]);
    acc.add("diff", lhs[static_cast<std::size_t>(i)] - rhs[static_cast<std::size_t>(i)]);
  }
  return {acc.mean("lhs"), acc.mean("rhs"), acc.stderr_of_mean("diff")};
}

void write_csv_rows(std::ostream& os, const SimulationResult& result) {
  const SimulationParams& p = result.params;
  auto row = [&](const std::string& name, double est, double se) {
    os << name << ',' << p.n << ',' << fmt17(est) << ',' << fmt17(se) << ',' << p.n_disorder << ','
       << p.sweeps << ',' << p.root_seed << '\n';
  };
  for (const std::string& name : result.acc.names()) {
    row(name, result.acc.mean(name), result.acc.stderr_of_mean(name));
  }
  if (result.gg) row("gg_residual", result.gg->residual, result.gg->stderr);
}

}  // namespace skfi

namespace skfi {

nlohmann::json to_json(const SimulationParams& p) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& [lo, hi] : p.windows) windows.push_back({lo, hi});
  nlohmann::json j = {{"beta", p.temp.beta},
                      {"coeffs", p.temp.xi.coeffs()},
                      {"h_mean", p.h.mean},
                      {"h_std", p.h.std},
                      {"n", p.n},
                      {"n_disorder", p.n_disorder},
                      {"n_replicas", p.n_replicas},
                      {"sweeps", p.sweeps},
                      {"burnin", p.burnin},
                      {"seed", p.root_seed},
                      {"windows", windows},
                      {"overlap_cuts", p.overlap_cuts},
                      {"cdf_bins", p.cdf_bins},
                      {"eps", p.eps},
                      {"mu_eps", p.mu_eps},
                      {"gg_level", p.gg_level},
                      {"gg_psi", to_string(p.gg_psi)},
                      {"gg_thresholds", p.gg_thresholds},
                      {"exact", p.exact},
                      {"mixing_diagnostic", p.mixing_diagnostic},
                      {"batches", p.batches}};
  j["mu_target"] = p.mu_target ? nlohmann::json(*p.mu_target) : nlohmann::json(nullptr);
  return j;
}

SimulationParams simulation_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  static const char* const kKeys[] = {
      "beta",  "coeffs", "h_mean",   "h_std",     "n",        "n_disorder",    "n_replicas",
      "sweeps", "burnin", "seed",    "windows",   "overlap_cuts", "cdf_bins", "eps",
      "mu_target", "mu_eps", "gg_level", "gg_psi", "gg_thresholds", "exact",
      "mixing_diagnostic", "batches"};
  for (const auto& item : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), item.key()) == std::end(kKeys)) {
      throw ConfigError("simulation config: unknown key '" + item.key() + "'");
    }
  }
  SimulationParams p;
  try {
    const double beta = j.value("beta", 0.0);
    const std::vector<double> coeffs = j.value("coeffs", std::vector<double>{});
    p.temp = TemperaturePoint(beta, MixtureXi(coeffs));
    p.h = GaussianField(j.value("h_mean", 0.0), j.value("h_std", 0.0));
    p.n = j.value("n", p.n);
    p.n_disorder = j.value("n_disorder", p.n_disorder);
    p.n_replicas = j.value("n_replicas", p.n_replicas);
    p.sweeps = j.value("sweeps", p.sweeps);
    p.burnin = j.value("burnin", p.burnin);
    p.root_seed = j.value("seed", p.root_seed);
    if (j.contains("windows")) {
      for (const auto& w : j.at("windows")) {
        if (!w.is_array() || w.size() != 2) throw ConfigError("simulation config: windows entries must be [lo, hi]");
        p.windows.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
      }
    }
    p.overlap_cuts = j.value("overlap_cuts", p.overlap_cuts);
    p.cdf_bins = j.value("cdf_bins", p.cdf_bins);
    p.eps = j.value("eps", p.eps);
    if (j.contains("mu_target") && !j.at("mu_target").is_null()) p.mu_target = j.at("mu_target").get<double>();
    p.mu_eps = j.value("mu_eps", p.mu_eps);
    p.gg_level = j.value("gg_level", p.gg_level);
    p.gg_psi = psi_from_string(j.value("gg_psi", std::string("x")));
    p.gg_thresholds = j.value("gg_thresholds", p.gg_thresholds);
    p.exact = j.value("exact", p.exact);
    p.mixing_diagnostic = j.value("mixing_diagnostic", p.mixing_diagnostic);
    p.batches = j.value("batches", p.batches);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  }
  validate(p);
  return p;
}

}  // namespace skfi
