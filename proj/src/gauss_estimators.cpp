#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "entropic/gauss.hpp"
#include "entropic/table.hpp"

namespace entropic::gauss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
}

// log exp(Q/alpha) - log q at each point; -inf where q vanishes.
std::vector<double> log_ratios(const QFunction& q_fn, const TruncatedNormalMixture& proposal,
                               const std::vector<Point>& points, double alpha) {
  std::vector<double> lw(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double lq = mixture_log_density(proposal, points[k]);
    lw[k] = std::isfinite(lq) ? q_fn(points[k]) / alpha - lq : kNegInf;
  }
  return lw;
}

TruncatedNormalMixture with_uniform_half(const TruncatedNormalMixture& q) {
  TruncatedNormalMixture out = q;
  for (double& w : out.weights) w *= 0.5;
  out.weights.push_back(0.5);
  out.uniform_component = true;
  return out;
}

}  // namespace

std::vector<double> snis_weights(const QFunction& q_fn, const TruncatedNormalMixture& proposal,
                                 const std::vector<Point>& points, double alpha) {
  check_alpha(alpha);
  std::vector<double> lw = log_ratios(q_fn, proposal, points, alpha);
  const double lse = log_sum_exp(lw);
  if (!std::isfinite(lse)) throw std::domain_error("no sample carries finite importance weight");
  for (double& x : lw) x = std::isfinite(x) ? std::exp(x - lse) : 0.0;
  return lw;
}

double snis_log_partition(const QFunction& q_fn, const TruncatedNormalMixture& proposal, double alpha,
                          const SamplerConfig& cfg) {
  check_alpha(alpha);
  if (cfg.sample_count == 0) throw std::invalid_argument("sample_count must be positive");
  const auto points = mixture_sample(proposal, cfg);
  const double lse = log_sum_exp(log_ratios(q_fn, proposal, points, alpha));
  if (!std::isfinite(lse)) throw std::domain_error("no sample carries finite importance weight");
  return alpha * (lse - std::log(static_cast<double>(cfg.sample_count)));
}

double snis_forward_kl(const QFunction& q_fn, double log_z, const TruncatedNormalMixture& model,
                       const TruncatedNormalMixture& reference, double alpha, const SamplerConfig& cfg) {
  const auto points = mixture_sample(reference, cfg);
  const auto w = snis_weights(q_fn, reference, points, alpha);
  double kl = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (w[k] <= 0.0) continue;
    kl += w[k] * (q_fn(points[k]) / alpha - log_z - mixture_log_density(model, points[k]));
  }
  return kl;
}

TruncatedNormalMixture fit_proposal(const QFunction& q_fn, const TruncatedNormalMixture& init, double alpha,
                                    const SamplerConfig& cfg, std::size_t em_iterations) {
  check_alpha(alpha);
  init.check();
  if (init.uniform_component) throw std::invalid_argument("fit_proposal: initial mixture must be Gaussian-only");
  if (cfg.sample_count == 0) throw std::invalid_argument("sample_count must be positive");
  TruncatedNormalMixture cur = init;
  const std::size_t n = cur.dim;
  const std::size_t mcount = cur.num_gaussians();
  std::vector<double> resp;
  std::vector<double> terms(mcount);

  for (std::size_t it = 0; it < em_iterations; ++it) {
    const TruncatedNormalMixture sampling = with_uniform_half(cur);
    const auto points = mixture_sample(sampling, {cfg.sample_count, derive_seed(cfg.seed, it)});
    const auto w = snis_weights(q_fn, sampling, points, alpha);

    // E-step: weighted responsibilities w_k r_km.
    resp.assign(points.size() * mcount, 0.0);
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (w[k] <= 0.0) continue;
      for (std::size_t m = 0; m < mcount; ++m)
        terms[m] = cur.weights[m] > 0.0
                       ? std::log(cur.weights[m]) + mixture_component_log_density(cur, m, points[k])
                       : kNegInf;
      const double lse = log_sum_exp(terms);
      if (!std::isfinite(lse)) continue;
      for (std::size_t m = 0; m < mcount; ++m) resp[k * mcount + m] = w[k] * std::exp(terms[m] - lse);
    }

    // M-step by weighted moment matching.
    TruncatedNormalMixture next = cur;
    double total = 0.0;
    for (std::size_t m = 0; m < mcount; ++m) {
      double mass = 0.0;
      std::vector<double> mean(n, 0.0);
      for (std::size_t k = 0; k < points.size(); ++k) {
        const double r = resp[k * mcount + m];
        if (r <= 0.0) continue;
        mass += r;
        for (std::size_t d = 0; d < n; ++d) mean[d] += r * points[k][d];
      }
      next.weights[m] = std::max(mass, kWeightFloor);
      total += next.weights[m];
      if (mass <= 1e-12) continue;  // starved: keep its location and shape
      for (double& x : mean) x /= mass;
      std::vector<double> var(n, 0.0);
      for (std::size_t k = 0; k < points.size(); ++k) {
        const double r = resp[k * mcount + m];
        if (r <= 0.0) continue;
        for (std::size_t d = 0; d < n; ++d) {
          const double dx = points[k][d] - mean[d];
          var[d] += r * dx * dx;
        }
      }
      for (std::size_t d = 0; d < n; ++d) {
        next.means[m][d] = mean[d];
        next.scales[m][d] = std::max(std::sqrt(var[d] / mass), kScaleFloor);
      }
    }
    for (double& x : next.weights) x /= total;
    cur = std::move(next);
  }
  return cur;
}

Point sir_policy_sample(const QFunction& q_fn, const TruncatedNormalMixture& proposal, double alpha,
                        const SamplerConfig& cfg) {
  if (cfg.sample_count == 0) throw std::invalid_argument("sample_count must be positive");
  const auto points = mixture_sample(proposal, cfg);
  const auto w = snis_weights(q_fn, proposal, points, alpha);
  Rng pick(cfg.seed, 1);
  const double u = pick.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    acc += w[k];
    if (u < acc) return points[k];
  }
  // Rounding left u above the running sum: take the last weighted point.
  for (std::size_t k = points.size(); k-- > 0;)
    if (w[k] > 0.0) return points[k];
  return points.back();
}

}  // namespace entropic::gauss
