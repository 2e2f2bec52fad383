#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entropic/mdp.hpp"
#include "entropic/table.hpp"

namespace entropic {

/// Temperature and stopping rule shared by every fixed-point iteration.
struct SolveConfig {
  double alpha = 1.0;
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;

  /// Throws std::invalid_argument unless alpha > 0, tolerance > 0 and
  /// max_iterations > 0.
  void check() const;
};

/// Raised when a caller needs a converged fixed point and did not get one.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Stochastic policy table [s][a]. Log-probabilities are kept alongside the
/// probabilities so that log-space sums stay exact when exp() underflows.
struct Policy {
  Table prob;
  Table log_prob;

  /// Wraps an explicit probability table; log_prob = log(prob) (-inf for 0).
  static Policy from_probabilities(Table prob);

  std::size_t num_states() const { return prob.rows(); }
  std::size_t num_actions() const { return prob.cols(); }

  /// Entropy (nats) of the action distribution at state s.
  double entropy(std::size_t s) const;
};

/// Throws std::invalid_argument if any row is negative or does not sum to 1
/// within `tol`.
void check_stochastic(const Policy& pi, double tol = 1e-9);

struct SoftSolution {
  Table q;
  std::vector<double> v;
  Policy policy;
  std::vector<double> log_partition;  // v / alpha
  double alpha = 1.0;
  std::size_t iterations_used = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Max-ent successor features of a fixed policy: psi [s][a] in R^d and
/// upsilon [s] in R^d, stored contiguously.
struct SuccessorFeatures {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t feature_dim = 0;
  std::vector<double> psi_data;
  std::vector<double> upsilon_data;
  Policy policy;
  double alpha = 1.0;
  std::size_t iterations_used = 0;
  bool converged = false;
  double residual = 0.0;

  std::span<const double> psi(std::size_t s, std::size_t a) const {
    return {psi_data.data() + (s * num_actions + a) * feature_dim, feature_dim};
  }
  std::span<const double> upsilon(std::size_t s) const {
    return {upsilon_data.data() + s * feature_dim, feature_dim};
  }
  /// psi . w as a [s][a] table: the policy's action value on task w.
  Table action_values(const TaskWeights& w) const;
};

/// r_w(s,a) = sum_{s'} p(s'|s,a) phi(s,a,s').w
Table reward_table(const TabularMdp& mdp, const TaskWeights& w);

/// pi(a|s) proportional to exp(Q(s,a)/alpha), normalised with log-sum-exp.
Policy boltzmann_policy(const Table& q, double alpha);

/// Soft Q iteration on r_w with synchronous sweeps, V(s) = alpha logsumexp(Q(s,.)/alpha).
/// Returns converged = false (with the last residual) if max_iterations is hit.
SoftSolution soft_value_iteration(const TabularMdp& mdp, const TaskWeights& w, const SolveConfig& cfg);

/// Max-ent value of a given policy on r_w. The returned policy is `pi` itself.
SoftSolution evaluate_policy_maxent(const TabularMdp& mdp, const Policy& pi, const TaskWeights& w,
                                    const SolveConfig& cfg);

SuccessorFeatures compute_successor_features(const TabularMdp& mdp, const Policy& pi,
                                             const SolveConfig& cfg);

/// Throws ConvergenceError naming `context` when `converged` is false.
void require_converged(bool converged, double residual, std::size_t iterations,
                       const std::string& context);

}  // namespace entropic
