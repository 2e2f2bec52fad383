#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace entropic::gauss {

/// Action box is [-1, 1)^n in every coordinate.
inline constexpr double kLower = -1.0;
inline constexpr double kUpper = 1.0;

using Point = std::vector<double>;
using QFunction = std::function<double(std::span<const double>)>;

/// Mixture of diagonal normals truncated to the action box, optionally with
/// an explicit uniform component. When `uniform_component` is set the
/// uniform block's weight is the last entry of `weights`.
struct TruncatedNormalMixture {
  std::size_t dim = 1;
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> scales;
  bool uniform_component = false;

  std::size_t num_gaussians() const { return means.size(); }
  std::size_t num_components() const { return means.size() + (uniform_component ? 1 : 0); }
  double uniform_weight() const { return uniform_component ? weights.back() : 0.0; }

  /// Throws std::invalid_argument unless weights lie on the simplex (1e-12),
  /// all scales are positive and every vector has length `dim`.
  void check() const;

  /// Single truncated normal component.
  static TruncatedNormalMixture single(std::vector<double> mean, std::vector<double> scale);

  friend bool operator==(const TruncatedNormalMixture&, const TruncatedNormalMixture&) = default;
};

struct SamplerConfig {
  std::size_t sample_count = 1000;
  std::uint64_t seed = 0;
};

/// Q(a) = offset - sum_k (a_k - center_k)^2 / (2 curvature_k^2). Its
/// Boltzmann distribution at temperature alpha is a truncated normal with
/// scale curvature_k * sqrt(alpha).
struct QuadraticQ {
  std::vector<double> center;
  std::vector<double> curvature;
  double offset = 0.0;

  double operator()(std::span<const double> a) const;
  /// Boltzmann distribution exp(Q/alpha) restricted to the box, as a mixture.
  TruncatedNormalMixture boltzmann(double alpha) const;
  /// log integral over the box of exp(Q(a)/alpha).
  double log_partition(double alpha) const;
  /// Mean of the Boltzmann distribution (truncated normal mean per coordinate).
  std::vector<double> boltzmann_mean(double alpha) const;
};

/// Deterministic random stream for a (seed, stream) pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 mixing of (seed, index); used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// log Phi(x) for the standard normal CDF, accurate deep in the lower tail.
double log_normal_cdf(double x);
/// log(Phi(b) - Phi(a)) for a < b.
double log_normal_cdf_diff(double a, double b);

/// log of the truncated mixture density; -inf outside the box.
double mixture_log_density(const TruncatedNormalMixture& q, std::span<const double> a);
/// log density of Gaussian component m alone (truncated, unweighted).
double mixture_component_log_density(const TruncatedNormalMixture& q, std::size_t m, std::span<const double> a);
/// log density of the Gaussian components ignoring truncation (no uniform block allowed).
double mixture_log_density_untruncated(const TruncatedNormalMixture& q, std::span<const double> a);

/// N i.i.d. draws, all inside [-1, 1)^n; deterministic in cfg.seed.
std::vector<Point> mixture_sample(const TruncatedNormalMixture& q, const SamplerConfig& cfg);

/// Power product q_i^b q_j^(1-b) component by component (truncation
/// ignored): M_i * M_j components, renormalised weights.
TruncatedNormalMixture mixture_power_product(const TruncatedNormalMixture& qi,
                                             const TruncatedNormalMixture& qj, double b);

/// Transfer proposal 1/4 (q_i + q_j + q_i^b q_j^(1-b) + uniform).
TruncatedNormalMixture transfer_proposal(const TruncatedNormalMixture& qi,
                                         const TruncatedNormalMixture& qj, double b);

/// Self-normalised weights of exp(Q/alpha)/q at the given points. Points with
/// zero proposal density get weight 0. Throws std::domain_error if no point
/// carries finite weight.
std::vector<double> snis_weights(const QFunction& q_fn, const TruncatedNormalMixture& proposal,
                                 const std::vector<Point>& points, double alpha);

/// alpha log((1/N) sum_k exp(Q(a_k)/alpha) / q(a_k)) with a_k ~ q.
double snis_log_partition(const QFunction& q_fn, const TruncatedNormalMixture& proposal, double alpha,
                          const SamplerConfig& cfg);

/// SNIS estimate of KL(pi || model) for pi proportional to exp(Q/alpha),
/// with samples from `reference` and the exact log-normaliser `log_z` of pi.
double snis_forward_kl(const QFunction& q_fn, double log_z, const TruncatedNormalMixture& model,
                       const TruncatedNormalMixture& reference, double alpha, const SamplerConfig& cfg);

inline constexpr double kScaleFloor = 1e-3;
inline constexpr double kWeightFloor = 1e-6;

/// Weighted EM fit of a proposal to exp(Q/alpha): each iteration draws N
/// samples from 1/2 (current + uniform), weights them by SNIS and refits
/// weights, means and scales. Scales floored at 1e-3, weights at 1e-6.
TruncatedNormalMixture fit_proposal(const QFunction& q_fn, const TruncatedNormalMixture& init, double alpha,
                                    const SamplerConfig& cfg, std::size_t em_iterations);

/// Sampling-importance-resampling: one draw from N proposal samples
/// resampled by their SNIS weights.
Point sir_policy_sample(const QFunction& q_fn, const TruncatedNormalMixture& proposal, double alpha,
                        const SamplerConfig& cfg);

/// Renyi divergence of order b between N(mu1, sigma) and N(mu2, sigma).
double gaussian_renyi(double mu1, double mu2, double sigma, double b);
/// (1 - b) * gaussian_renyi = -log int N1^b N2^(1-b).
double gaussian_gb(double mu1, double mu2, double sigma, double b);

/// Composite Simpson rule on [lo, hi] with `intervals` (rounded up to even).
double integrate_simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t intervals);

/// Tensor Simpson integral of f over the box for dim 1 or 2.
double integrate_box(const std::function<double(std::span<const double>)>& f, std::size_t dim,
                     std::size_t intervals);

/// Normal density N(x; mu, sigma).
double normal_pdf(double x, double mu, double sigma);

}  // namespace entropic::gauss
