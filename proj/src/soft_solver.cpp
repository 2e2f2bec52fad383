#include "entropic/soft_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace entropic {

namespace {

void check_weights_dim(const TabularMdp& mdp, const TaskWeights& w) {
  if (w.size() != mdp.feature_dim())
    throw std::invalid_argument("task weights dimension does not match the MDP feature dimension");
}

void check_policy_shape(const TabularMdp& mdp, const Policy& pi) {
  if (pi.num_states() != mdp.num_states() || pi.num_actions() != mdp.num_actions())
    throw std::invalid_argument("policy shape does not match the MDP");
}

// Q(s,a) = r(s,a) + gamma E_{s'}[V(s')]
void backup(const TabularMdp& mdp, const Table& reward, const std::vector<double>& v, Table& q) {
  const double gamma = mdp.gamma();
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double ev = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a)) ev += o.prob * v[o.next];
      q(s, a) = reward(s, a) + gamma * ev;
    }
  }
}

double soft_max_value(std::span<const double> q_row, double alpha, std::vector<double>& scratch) {
  scratch.resize(q_row.size());
  for (std::size_t a = 0; a < q_row.size(); ++a) scratch[a] = q_row[a] / alpha;
  return alpha * log_sum_exp(scratch);
}

double policy_value(std::span<const double> q_row, const Policy& pi, std::size_t s, double alpha_h) {
  double v = alpha_h;
  const auto p = pi.prob.row(s);
  for (std::size_t a = 0; a < q_row.size(); ++a)
    if (p[a] > 0.0) v += p[a] * q_row[a];
  return v;
}

}  // namespace

void SolveConfig::check() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");
}

Policy Policy::from_probabilities(Table prob) {
  Table log_prob(prob.rows(), prob.cols());
  for (std::size_t k = 0; k < prob.data().size(); ++k) {
    const double p = prob.data()[k];
    log_prob.data()[k] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }
  return Policy{std::move(prob), std::move(log_prob)};
}

double Policy::entropy(std::size_t s) const {
  double h = 0.0;
  const auto p = prob.row(s);
  const auto lp = log_prob.row(s);
  for (std::size_t a = 0; a < p.size(); ++a)
    if (p[a] > 0.0) h -= p[a] * lp[a];
  return h;
}

void check_stochastic(const Policy& pi, double tol) {
  for (std::size_t s = 0; s < pi.num_states(); ++s) {
    double sum = 0.0;
    for (double p : pi.prob.row(s)) {
      if (!(p >= 0.0)) {
        std::ostringstream msg;
        msg << "policy row " << s << " has a negative or NaN probability";
        throw std::invalid_argument(msg.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << "policy row " << s << " sums to " << sum << ", not 1";
      throw std::invalid_argument(msg.str());
    }
  }
}

Table SuccessorFeatures::action_values(const TaskWeights& w) const {
  if (w.size() != feature_dim) throw std::invalid_argument("task weights dimension mismatch");
  Table q(num_states, num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const auto p = psi(s, a);
      double dot = 0.0;
      for (std::size_t k = 0; k < feature_dim; ++k) dot += p[k] * w[k];
      q(s, a) = dot;
    }
  }
  return q;
}

Table reward_table(const TabularMdp& mdp, const TaskWeights& w) {
  check_weights_dim(mdp, w);
  Table r(mdp.num_states(), mdp.num_actions());
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) r(s, a) = mdp.expected_reward(s, a, w.values());
  return r;
}

Policy boltzmann_policy(const Table& q, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("boltzmann_policy: alpha must be positive");
  Table prob(q.rows(), q.cols());
  Table log_prob(q.rows(), q.cols());
  std::vector<double> scaled(q.cols());
  for (std::size_t s = 0; s < q.rows(); ++s) {
    const auto row = q.row(s);
    for (std::size_t a = 0; a < q.cols(); ++a) {
      if (std::isnan(row[a])) throw std::invalid_argument("boltzmann_policy: NaN in Q");
      scaled[a] = row[a] / alpha;
    }
    const double lse = log_sum_exp(scaled);
    for (std::size_t a = 0; a < q.cols(); ++a) {
      log_prob(s, a) = scaled[a] - lse;
      prob(s, a) = std::exp(log_prob(s, a));
    }
  }
  return Policy{std::move(prob), std::move(log_prob)};
}

SoftSolution soft_value_iteration(const TabularMdp& mdp, const TaskWeights& w, const SolveConfig& cfg) {
  cfg.check();
  const Table reward = reward_table(mdp, w);
  const std::size_t n = mdp.num_states();
  std::vector<double> v(n, 0.0);
  std::vector<double> v_next(n, 0.0);
  std::vector<double> scratch;
  Table q(n, mdp.num_actions());

  SoftSolution sol;
  sol.alpha = cfg.alpha;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < cfg.max_iterations) {
    backup(mdp, reward, v, q);
    residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      v_next[s] = soft_max_value(q.row(s), cfg.alpha, scratch);
      residual = std::max(residual, std::abs(v_next[s] - v[s]));
    }
    v.swap(v_next);
    ++it;
    if (residual <= cfg.tolerance) {
      sol.converged = true;
      break;
    }
  }
  // Final Q from the last V, then V exactly consistent with that Q.
  backup(mdp, reward, v, q);
  for (std::size_t s = 0; s < n; ++s) v[s] = soft_max_value(q.row(s), cfg.alpha, scratch);

  sol.policy = boltzmann_policy(q, cfg.alpha);
  sol.log_partition.resize(n);
  for (std::size_t s = 0; s < n; ++s) sol.log_partition[s] = v[s] / cfg.alpha;
  sol.q = std::move(q);
  sol.v = std::move(v);
  sol.iterations_used = it;
  sol.residual = residual;
  return sol;
}

SoftSolution evaluate_policy_maxent(const TabularMdp& mdp, const Policy& pi, const TaskWeights& w,
                                    const SolveConfig& cfg) {
  cfg.check();
  check_policy_shape(mdp, pi);
  check_stochastic(pi);
  const Table reward = reward_table(mdp, w);
  const std::size_t n = mdp.num_states();
  std::vector<double> alpha_h(n);
  for (std::size_t s = 0; s < n; ++s) alpha_h[s] = cfg.alpha * pi.entropy(s);

  std::vector<double> v(n, 0.0);
  std::vector<double> v_next(n, 0.0);
  Table q(n, mdp.num_actions());
  SoftSolution sol;
  sol.alpha = cfg.alpha;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < cfg.max_iterations) {
    backup(mdp, reward, v, q);
    residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      v_next[s] = policy_value(q.row(s), pi, s, alpha_h[s]);
      residual = std::max(residual, std::abs(v_next[s] - v[s]));
    }
    v.swap(v_next);
    ++it;
    if (residual <= cfg.tolerance) {
      sol.converged = true;
      break;
    }
  }
  backup(mdp, reward, v, q);
  for (std::size_t s = 0; s < n; ++s) v[s] = policy_value(q.row(s), pi, s, alpha_h[s]);

  sol.log_partition.resize(n);
  for (std::size_t s = 0; s < n; ++s) sol.log_partition[s] = v[s] / cfg.alpha;
  sol.q = std::move(q);
  sol.v = std::move(v);
  sol.policy = pi;
  sol.iterations_used = it;
  sol.residual = residual;
  return sol;
}

SuccessorFeatures compute_successor_features(const TabularMdp& mdp, const Policy& pi,
                                             const SolveConfig& cfg) {
  cfg.check();
  check_policy_shape(mdp, pi);
  check_stochastic(pi);
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  const std::size_t d = mdp.feature_dim();
  const double gamma = mdp.gamma();

  std::vector<double> expected_phi(n * na * d);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < na; ++a) {
      const auto f = mdp.expected_features(s, a);
      std::copy(f.begin(), f.end(), expected_phi.begin() + static_cast<std::ptrdiff_t>((s * na + a) * d));
    }
  std::vector<double> alpha_h(n);
  for (std::size_t s = 0; s < n; ++s) alpha_h[s] = cfg.alpha * pi.entropy(s);

  SuccessorFeatures sf;
  sf.num_states = n;
  sf.num_actions = na;
  sf.feature_dim = d;
  sf.psi_data.assign(n * na * d, 0.0);
  sf.upsilon_data.assign(n * d, 0.0);
  sf.alpha = cfg.alpha;
  std::vector<double> ups_next(n * d, 0.0);

  auto sweep_psi = [&] {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < na; ++a) {
        double* psi = sf.psi_data.data() + (s * na + a) * d;
        const double* ephi = expected_phi.data() + (s * na + a) * d;
        for (std::size_t k = 0; k < d; ++k) psi[k] = ephi[k];
        for (const Outcome& o : mdp.outcomes(s, a)) {
          const double* ups = sf.upsilon_data.data() + o.next * d;
          for (std::size_t k = 0; k < d; ++k) psi[k] += gamma * o.prob * ups[k];
        }
      }
  };
  auto upsilon_of = [&](std::size_t s, double* out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = alpha_h[s];
    const auto p = pi.prob.row(s);
    for (std::size_t a = 0; a < na; ++a) {
      if (p[a] <= 0.0) continue;
      const double* psi = sf.psi_data.data() + (s * na + a) * d;
      for (std::size_t k = 0; k < d; ++k) out[k] += p[a] * psi[k];
    }
  };

  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < cfg.max_iterations) {
    sweep_psi();
    residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      upsilon_of(s, ups_next.data() + s * d);
      for (std::size_t k = 0; k < d; ++k)
        residual = std::max(residual, std::abs(ups_next[s * d + k] - sf.upsilon_data[s * d + k]));
    }
    sf.upsilon_data.swap(ups_next);
    ++it;
    if (residual <= cfg.tolerance) {
      sf.converged = true;
      break;
    }
  }
  sweep_psi();
  for (std::size_t s = 0; s < n; ++s) upsilon_of(s, sf.upsilon_data.data() + s * d);

  sf.policy = pi;
  sf.iterations_used = it;
  sf.residual = residual;
  return sf;
}

void require_converged(bool converged, double residual, std::size_t iterations,
                       const std::string& context) {
  if (converged) return;
  std::ostringstream msg;
  msg << context << ": no convergence after " << iterations << " iterations (last residual "
      << residual << ")";
  throw ConvergenceError(msg.str(), residual, iterations);
}

}  // namespace entropic
