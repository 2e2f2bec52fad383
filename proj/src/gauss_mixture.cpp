#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "entropic/gauss.hpp"
#include "entropic/table.hpp"

namespace entropic::gauss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double log_normal_pdf_std(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// Inverse of log Phi deep in the lower tail, by Newton steps on log Phi.
double inverse_log_normal_cdf(double lp) {
  double x = -std::sqrt(-2.0 * lp);
  for (int it = 0; it < 50; ++it) {
    const double f = log_normal_cdf(x) - lp;
    const double step = f / std::exp(log_normal_pdf_std(x) - log_normal_cdf(x));
    x -= step;
    if (std::abs(step) <= 1e-14 * std::abs(x)) break;
  }
  return x;
}

// Standard normal draw restricted to [lo, hi] by inverting the CDF. Works on
// the lower tail so that Phi does not round to 1, and in log space once Phi
// underflows.
double truncated_standard_normal(double lo, double hi, double u) {
  if (lo > 0.0) return -truncated_standard_normal(-hi, -lo, 1.0 - u);
  const double la = log_normal_cdf(lo);
  const double lb = log_normal_cdf(hi);
  // log(Phi(lo) + u (Phi(hi) - Phi(lo))), relative to Phi(hi).
  const double lp = lb + std::log(u + (1.0 - u) * std::exp(la - lb));
  double x;
  if (lp > std::log(1e-300)) {
    const double p = std::exp(lp);
    x = p >= 1.0 ? hi : -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  } else {
    x = inverse_log_normal_cdf(lp);
  }
  return std::clamp(x, lo, hi);
}

double component_log_density(const std::vector<double>& mean, const std::vector<double>& scale,
                             std::span<const double> a) {
  double lp = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double s = scale[k];
    const double z = (a[k] - mean[k]) / s;
    const double lo = (kLower - mean[k]) / s;
    const double hi = (kUpper - mean[k]) / s;
    lp += log_normal_pdf_std(z) - std::log(s) - log_normal_cdf_diff(lo, hi);
  }
  return lp;
}

}  // namespace

void TruncatedNormalMixture::check() const {
  if (dim == 0) throw std::invalid_argument("mixture dimension must be positive");
  if (means.size() != scales.size()) throw std::invalid_argument("mixture means and scales differ in count");
  if (weights.size() != num_components())
    throw std::invalid_argument("mixture weight count does not match its components");
  if (num_components() == 0) throw std::invalid_argument("mixture has no components");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("mixture weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
  for (std::size_t m = 0; m < means.size(); ++m) {
    if (means[m].size() != dim || scales[m].size() != dim)
      throw std::invalid_argument("mixture component has the wrong dimension");
    for (std::size_t k = 0; k < dim; ++k) {
      if (!std::isfinite(means[m][k])) throw std::invalid_argument("mixture mean must be finite");
      if (!(scales[m][k] > 0.0) || !std::isfinite(scales[m][k]))
        throw std::invalid_argument("mixture scales must be positive and finite");
    }
  }
}

TruncatedNormalMixture TruncatedNormalMixture::single(std::vector<double> mean, std::vector<double> scale) {
  TruncatedNormalMixture q;
  q.dim = mean.size();
  q.weights = {1.0};
  q.means = {std::move(mean)};
  q.scales = {std::move(scale)};
  q.check();
  return q;
}

double QuadraticQ::operator()(std::span<const double> a) const {
  double q = offset;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = (a[k] - center[k]) / curvature[k];
    q -= 0.5 * d * d;
  }
  return q;
}

TruncatedNormalMixture QuadraticQ::boltzmann(double alpha) const {
  std::vector<double> scale(curvature.size());
  for (std::size_t k = 0; k < scale.size(); ++k) scale[k] = curvature[k] * std::sqrt(alpha);
  return TruncatedNormalMixture::single(center, scale);
}

double QuadraticQ::log_partition(double alpha) const {
  double lz = offset / alpha;
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double s = curvature[k] * std::sqrt(alpha);
    lz += kLogSqrt2Pi + std::log(s) + log_normal_cdf_diff((kLower - center[k]) / s, (kUpper - center[k]) / s);
  }
  return lz;
}

std::vector<double> QuadraticQ::boltzmann_mean(double alpha) const {
  std::vector<double> mean(center.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double s = curvature[k] * std::sqrt(alpha);
    const double lo = (kLower - center[k]) / s;
    const double hi = (kUpper - center[k]) / s;
    const double lz = log_normal_cdf_diff(lo, hi);
    mean[k] = center[k] + s * (std::exp(log_normal_pdf_std(lo) - lz) - std::exp(log_normal_pdf_std(hi) - lz));
  }
  return mean;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -37.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Asymptotic series of the Mills ratio.
  const double y = 1.0 / (x * x);
  const double series = y * (-1.0 + y * (3.0 + y * (-15.0 + y * (105.0 - 945.0 * y))));
  return log_normal_pdf_std(x) - std::log(-x) + std::log1p(series);
}

double log_normal_cdf_diff(double a, double b) {
  if (!(a < b)) return kNegInf;
  if (a < 0.0 && b > 0.0)
    return std::log(0.5 * (std::erf(b / std::numbers::sqrt2) - std::erf(a / std::numbers::sqrt2)));
  if (a >= 0.0) return log_normal_cdf_diff(-b, -a);
  const double lb = log_normal_cdf(b);
  const double la = log_normal_cdf(a);
  return lb + std::log1p(-std::exp(la - lb));
}

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(log_normal_pdf_std(z)) / sigma;
}

double mixture_log_density(const TruncatedNormalMixture& q, std::span<const double> a) {
  if (a.size() != q.dim) throw std::invalid_argument("point dimension does not match the mixture");
  for (double x : a)
    if (!(x >= kLower && x < kUpper)) return kNegInf;
  std::vector<double> terms;
  terms.reserve(q.num_components());
  for (std::size_t m = 0; m < q.num_gaussians(); ++m) {
    if (q.weights[m] <= 0.0) continue;
    terms.push_back(std::log(q.weights[m]) + component_log_density(q.means[m], q.scales[m], a));
  }
  if (q.uniform_component && q.uniform_weight() > 0.0)
    terms.push_back(std::log(q.uniform_weight()) - static_cast<double>(q.dim) * std::numbers::ln2);
  return log_sum_exp(terms);
}

double mixture_component_log_density(const TruncatedNormalMixture& q, std::size_t m, std::span<const double> a) {
  for (double x : a)
    if (!(x >= kLower && x < kUpper)) return kNegInf;
  return component_log_density(q.means.at(m), q.scales.at(m), a);
}

double mixture_log_density_untruncated(const TruncatedNormalMixture& q, std::span<const double> a) {
  if (q.uniform_component) throw std::invalid_argument("untruncated density is undefined with a uniform block");
  if (a.size() != q.dim) throw std::invalid_argument("point dimension does not match the mixture");
  std::vector<double> terms;
  for (std::size_t m = 0; m < q.num_gaussians(); ++m) {
    if (q.weights[m] <= 0.0) continue;
    double lp = std::log(q.weights[m]);
    for (std::size_t k = 0; k < a.size(); ++k)
      lp += log_normal_pdf_std((a[k] - q.means[m][k]) / q.scales[m][k]) - std::log(q.scales[m][k]);
    terms.push_back(lp);
  }
  return log_sum_exp(terms);
}

std::vector<Point> mixture_sample(const TruncatedNormalMixture& q, const SamplerConfig& cfg) {
  q.check();
  Rng rng(cfg.seed);
  const double top = std::nextafter(kUpper, kLower);
  std::vector<Point> out;
  out.reserve(cfg.sample_count);
  for (std::size_t i = 0; i < cfg.sample_count; ++i) {
    const double u = rng.uniform();
    std::size_t m = 0;
    double acc = q.weights[0];
    while (u >= acc && m + 1 < q.weights.size()) acc += q.weights[++m];
    Point p(q.dim);
    const bool uniform = q.uniform_component && m == q.num_gaussians();
    for (std::size_t k = 0; k < q.dim; ++k) {
      const double v = rng.uniform();
      double x;
      if (uniform) {
        x = kLower + (kUpper - kLower) * v;
      } else {
        const double mu = q.means[m][k];
        const double s = q.scales[m][k];
        x = mu + s * truncated_standard_normal((kLower - mu) / s, (kUpper - mu) / s, v);
      }
      p[k] = std::clamp(x, kLower, top);
    }
    out.push_back(std::move(p));
  }
  return out;
}

TruncatedNormalMixture mixture_power_product(const TruncatedNormalMixture& qi, const TruncatedNormalMixture& qj,
                                             double b) {
  qi.check();
  qj.check();
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("power product exponent must lie in [0, 1]");
  if (qi.dim != qj.dim) throw std::invalid_argument("power product of mixtures with different dimension");
  if (qi.uniform_component || qj.uniform_component)
    throw std::invalid_argument("power product needs Gaussian-only mixtures");
  const std::size_t n = qi.dim;
  TruncatedNormalMixture out;
  out.dim = n;
  std::vector<double> log_w;
  for (std::size_t m = 0; m < qi.num_gaussians(); ++m) {
    for (std::size_t l = 0; l < qj.num_gaussians(); ++l) {
      std::vector<double> mean(n), scale(n);
      double lw = (qi.weights[m] > 0.0 ? b * std::log(qi.weights[m]) : (b == 0.0 ? 0.0 : kNegInf)) +
                  (qj.weights[l] > 0.0 ? (1.0 - b) * std::log(qj.weights[l]) : (b == 1.0 ? 0.0 : kNegInf));
      for (std::size_t k = 0; k < n; ++k) {
        const double mi = qi.means[m][k], si = qi.scales[m][k];
        const double mj = qj.means[l][k], sj = qj.scales[l][k];
        if (b == 1.0) {
          mean[k] = mi;
          scale[k] = si;
          continue;
        }
        if (b == 0.0) {
          mean[k] = mj;
          scale[k] = sj;
          continue;
        }
        const double pi = b / (si * si);
        const double pj = (1.0 - b) / (sj * sj);
        const double prec = pi + pj;
        const double var = 1.0 / prec;
        const double mu = var * (pi * mi + pj * mj);
        mean[k] = mu;
        scale[k] = std::sqrt(var);
        // log of int N(x; mi, si)^b N(x; mj, sj)^(1-b) dx; the 2 pi factors cancel.
        lw += -b * std::log(si) - (1.0 - b) * std::log(sj) + 0.5 * std::log(var) -
              0.5 * (b * mi * mi / (si * si) + (1.0 - b) * mj * mj / (sj * sj) - mu * mu * prec);
      }
      log_w.push_back(lw);
      out.means.push_back(std::move(mean));
      out.scales.push_back(std::move(scale));
    }
  }
  if (b == 1.0 || b == 0.0) {
    // w_i^1 w_j^0: the surviving side's weights, spread evenly over the duplicates.
    const double mi = static_cast<double>(qi.num_gaussians());
    const double mj = static_cast<double>(qj.num_gaussians());
    for (std::size_t m = 0; m < qi.num_gaussians(); ++m)
      for (std::size_t l = 0; l < qj.num_gaussians(); ++l)
        out.weights.push_back(b == 1.0 ? qi.weights[m] / mj : qj.weights[l] / mi);
    return out;
  }
  const double lse = log_sum_exp(log_w);
  if (!std::isfinite(lse)) throw std::domain_error("power product has no mass");
  out.weights.resize(log_w.size());
  for (std::size_t k = 0; k < log_w.size(); ++k) out.weights[k] = std::exp(log_w[k] - lse);
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  for (double& w : out.weights) w /= sum;
  return out;
}

TruncatedNormalMixture transfer_proposal(const TruncatedNormalMixture& qi, const TruncatedNormalMixture& qj,
                                         double b) {
  const TruncatedNormalMixture prod = mixture_power_product(qi, qj, b);
  TruncatedNormalMixture out;
  out.dim = qi.dim;
  out.uniform_component = true;
  for (const TruncatedNormalMixture* part : {&qi, &qj, &prod}) {
    for (std::size_t m = 0; m < part->num_gaussians(); ++m) {
      out.weights.push_back(0.25 * part->weights[m]);
      out.means.push_back(part->means[m]);
      out.scales.push_back(part->scales[m]);
    }
  }
  out.weights.push_back(0.25);
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  for (double& w : out.weights) w /= sum;
  return out;
}

}  // namespace entropic::gauss
