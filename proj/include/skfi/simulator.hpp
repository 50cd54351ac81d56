#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skfi/accumulator.hpp"
#include "skfi/model.hpp"
#include "skfi/rng.hpp"

namespace skfi {

/// Finite-N disorder: Gaussian couplings for p = 1, 2 and i.i.d. fields.
struct DisorderSample {
  int n = 0;
  MixtureXi xi;
  std::vector<double> g2;      // n*n, row-major g2[i*n + j]
  std::vector<double> g4;      // n^4 or empty
  std::vector<double> fields;  // h_i
  std::uint64_t root_seed = 0;
  std::uint32_t index = 0;

  bool has_g4() const { return !g4.empty(); }
};

inline constexpr int kMaxQuarticN = 28;
inline constexpr int kMaxEnumerateN = 16;
inline constexpr int kMaxEnumerateQuarticN = 12;

/// Couplings from the disorder stream (root_seed, index): g2, g4 and the
/// fields use separate sub-streams, so adding g4 leaves g2 and fields intact.
/// g4 is drawn when beta_2 != 0 or `force_g4`.
DisorderSample sample_disorder(int n, const MixtureXi& xi, const GaussianField& h,
                               std::uint64_t root_seed, std::uint32_t index,
                               bool force_g4 = false);

/// Spins in {-1, +1}.
using SpinConfig = std::vector<int>;

double magnetization(const SpinConfig& s);
double overlap(const SpinConfig& a, const SpinConfig& b);

/// H(sigma) evaluated term by term over all ordered index tuples, O(n^4).
double hamiltonian(const DisorderSample& d, const SpinConfig& sigma, double beta);

/// The same Hamiltonian reduced to a constant, pair couplings J (symmetric,
/// zero diagonal), a quartic tensor over distinct indices and the fields.
/// The Curie-Weiss term is kept separate: (beta / 2n) S^2 with S = sum sigma.
struct Couplings {
  int n = 0;
  double beta = 0.0;
  double constant = 0.0;
  std::vector<double> pair;     // n*n
  std::vector<double> quartic;  // n^4, nonzero only for distinct indices; empty if none
  std::vector<double> fields;

  double energy(const SpinConfig& s) const;
  /// phi_a with H(sigma^a) - H(sigma) = -2 sigma_a phi_a (sigma^a: site a flipped).
  double local_field(const SpinConfig& s, int a) const;
  /// The quartic part of local_field, O(n^3).
  double quartic_field(const SpinConfig& s, int a) const;
};

Couplings effective_couplings(const DisorderSample& d, double beta);

/// Probability of sigma_a = +1 under heat-bath dynamics with local field phi.
double heat_bath_up_probability(double phi);

struct ExactResult {
  double log_z = 0.0;
  double mean_m = 0.0;
  double mean_m2 = 0.0;
  double mean_abs_m = 0.0;
  std::vector<double> m_pmf;        // P(m = -1 + 2k/n), k = 0..n
  std::vector<double> correlation;  // <sigma_i sigma_j>, n*n (empty unless requested)
  std::vector<double> overlap_pmf;  // P(R12 = 1 - 2k/n), k = 0..n
  double r2 = 0.0;                  // <R12^2>
  double r4 = 0.0;                  // <R12^4>

  /// <R12^{2p}> from overlap_pmf.
  double overlap_moment(int p) const;
  /// Gibbs probability of lo <= m <= hi.
  double m_window(double lo, double hi) const;
};

/// Exact Gibbs quantities by Gray-code enumeration with single-flip energy
/// updates. The two-replica overlap law is the autocorrelation of the Gibbs
/// weights, computed with a Walsh-Hadamard transform.
ExactResult enumerate_exact(const DisorderSample& d, double beta, bool correlations = false);

/// One Markov chain (replica) with cached pair fields.
class Chain {
 public:
  Chain(const Couplings& c, SpinConfig start, StreamRng spin_rng, StreamRng order_rng);

  const SpinConfig& spins() const { return spins_; }
  int sum() const { return sum_; }
  double magnetization() const;
  /// One sweep: every site once, in a fresh random order, heat-bath update.
  void sweep();
  /// Recomputes the cached fields from scratch.
  void resync();

 private:
  void flip(int a);

  const Couplings* c_;
  SpinConfig spins_;
  int sum_ = 0;
  std::vector<double> pair_field_;
  std::vector<int> order_;
  StreamRng spin_rng_;
  StreamRng order_rng_;
};

/// Independent chains under one disorder.
struct ReplicaSet {
  DisorderSample disorder;
  Couplings couplings;
  std::vector<Chain> chains;
};

/// Replica set with uniformly random starts; chain r draws from the streams
/// (chain, disorder index, r) and (site_order, disorder index, r).
ReplicaSet make_replicas(const DisorderSample& d, double beta, int n_replicas);

void heat_bath_sweep(ReplicaSet& state, long sweeps);

/// sum_l |m_l| <= sqrt(n + sum_{l != l'} |R_{l,l'}|), evaluated exactly in
/// integers.
bool replica_inequality_check(const std::vector<SpinConfig>& replicas);

enum class PsiKind { x, x2, abs };
std::string to_string(PsiKind k);
PsiKind psi_from_string(const std::string& s);

struct SimulationParams {
  TemperaturePoint temp;
  GaussianField h;
  int n = 10;
  int n_disorder = 10;
  int n_replicas = 4;
  long sweeps = 10000;
  long burnin = 1000;
  std::uint64_t root_seed = 1;
  std::vector<std::pair<double, double>> windows;  // m-windows [lo, hi]
  std::vector<double> overlap_cuts;                // c' for <I(R12 <= c')>
  int cdf_bins = 10;
  double eps = 0.05;                 // ultrametric / magnetization-overlap tolerance
  std::optional<double> mu_target;   // Prop. histogram target
  double mu_eps = 0.1;
  int gg_level = 2;
  PsiKind gg_psi = PsiKind::x;
  std::vector<double> gg_thresholds{0.0};  // f = prod sgn(R_ab - t)
  bool exact = true;                 // add exact enumeration where the size allows
  bool mixing_diagnostic = true;     // extra all-up chain compared with replica 0
  int batches = 20;
};

void validate(const SimulationParams& p);

nlohmann::json to_json(const SimulationParams& p);
/// Strict: unknown keys are ConfigErrors. Missing keys keep their defaults;
/// "seed" overrides root_seed.
SimulationParams simulation_params_from_json(const nlohmann::json& j);

/// Gibbs averages for one disorder: time averages over measurement sweeps,
/// averaged over replicas, pairs or ordered tuples.
struct DisorderRecord {
  std::uint32_t index = 0;
  std::map<std::string, double> values;
  std::map<std::string, double> stderrs;  // batch-means Gibbs standard errors
  std::optional<ExactResult> exact;
  std::int64_t inequality_checks = 0;
  std::int64_t inequality_violations = 0;
};

struct GgResidual {
  double residual = 0.0;  // max |residual| over the family
  double stderr = 0.0;    // delta-method standard error of that member
  std::vector<double> per_member;
  std::vector<std::string> members;
};

struct SimulationResult {
  SimulationParams params;
  MomentAccumulator acc;  // disorder-level values per observable
  std::vector<DisorderRecord> disorders;
  std::int64_t inequality_checks = 0;
  std::int64_t inequality_violations = 0;
  std::optional<GgResidual> gg;
};

/// Runs every disorder (in parallel across disorders) and accumulates
/// disorder-averaged Gibbs averages. Deterministic given params.
SimulationResult estimate_observables(const SimulationParams& params);

/// GG residual n E<psi(R_{1,n+1}) f> - E<psi(R_12)> E<f> - sum_{l=2..n} E<psi(R_{1,l}) f>,
/// maximized over the family {1} and prod_{a<b<=n} sgn(R_ab - t), t in gg_thresholds.
GgResidual gg_residual(const SimulationResult& result);

struct DerivativeCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr = 0.0;
};

/// Central difference in beta_p of (1/n) mean log Z over common disorders
/// against beta_p (1 - mean <R12^{2p}>), both exact by enumeration.
DerivativeCheck finite_n_derivative_check(const SimulationParams& params, int p, double epsilon);

inline constexpr const char* kCsvHeader = "observable,n,estimate,stderr,n_disorder,sweeps,seed";
/// One CSV row per observable (no header), sorted by observable name.
void write_csv_rows(std::ostream& os, const SimulationResult& result);

}  // namespace skfi
