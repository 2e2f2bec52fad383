#include "entropic/composer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entropic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_b(double b) {
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("b must lie in [0, 1]");
}

// Sum_k w_k log pi_k(a|s) with 0 * log 0 taken as 0.
Table weighted_log_product(const std::vector<Policy>& policies, const TaskWeights& w) {
  const Table& first = policies.front().log_prob;
  Table out(first.rows(), first.cols(), 0.0);
  for (std::size_t k = 0; k < policies.size(); ++k) {
    if (w[k] == 0.0) continue;
    const Table& lp = policies[k].log_prob;
    for (std::size_t idx = 0; idx < out.data().size(); ++idx) out.data()[idx] += w[k] * lp.data()[idx];
  }
  return out;
}

void check_policies(const TabularMdp& mdp, const std::vector<Policy>& policies, const TaskWeights& w) {
  if (policies.size() < 2) throw std::invalid_argument("DC needs at least two policies");
  if (w.size() != policies.size()) throw std::invalid_argument("one weight per policy is required");
  for (const Policy& p : policies) {
    if (p.num_states() != mdp.num_states() || p.num_actions() != mdp.num_actions())
      throw std::invalid_argument("policy shape does not match the MDP");
    check_stochastic(p);
  }
}

// inner(s') = log sum_{a'} exp(L(s',a') - C(s',a')/alpha)
std::vector<double> log_partition_of_product(const Table& log_product, const Table& c, double alpha) {
  std::vector<double> inner(log_product.rows());
  std::vector<double> terms(log_product.cols());
  for (std::size_t s = 0; s < log_product.rows(); ++s) {
    for (std::size_t a = 0; a < log_product.cols(); ++a) {
      const double l = log_product(s, a);
      terms[a] = l == kNegInf ? kNegInf : l - c(s, a) / alpha;
    }
    inner[s] = log_sum_exp(terms);
    if (inner[s] == kNegInf) {
      std::ostringstream msg;
      msg << "policies have disjoint support at state " << s;
      throw std::domain_error(msg.str());
    }
  }
  return inner;
}

Table apply_dc_backup(const TabularMdp& mdp, const std::vector<double>& inner, double alpha) {
  Table out(mdp.num_states(), mdp.num_actions());
  const double scale = -alpha * mdp.gamma();
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double e = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a)) e += o.prob * inner[o.next];
      out(s, a) = scale * e;
    }
  return out;
}

ComposedPolicy make_composed(Method m, Table q, double alpha, Provenance prov) {
  ComposedPolicy out;
  out.method = m;
  out.policy = boltzmann_policy(q, alpha);
  out.q = std::move(q);
  out.alpha = alpha;
  out.provenance = std::move(prov);
  return out;
}

std::vector<std::string> default_base_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n; ++k) names.push_back("base" + std::to_string(k));
  return names;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::co: return "co";
    case Method::gpi: return "gpi";
    case Method::dc: return "dc";
    case Method::dc_cheap: return "dc-cheap";
    case Method::dc_cheap_gpi: return "dc-cheap-gpi";
    case Method::condq: return "condq";
  }
  return "?";
}

std::string method_tag(Method m) {
  switch (m) {
    case Method::co: return "CO";
    case Method::gpi: return "GPI";
    case Method::dc: return "DC";
    case Method::dc_cheap: return "DC_CHEAP";
    case Method::dc_cheap_gpi: return "DC_CHEAP_GPI";
    case Method::condq: return "CONDQ";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::co,       Method::gpi,          Method::dc,
                                           Method::dc_cheap, Method::dc_cheap_gpi, Method::condq};
  return methods;
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (name == method_name(m) || name == method_tag(m)) return m;
  std::string valid;
  for (Method m : all_methods()) valid += (valid.empty() ? "" : ", ") + method_name(m);
  throw std::invalid_argument("unknown method '" + name + "' (valid: " + valid + ")");
}

ComposedPolicy compose_co(const Table& qi, const Table& qj, double b, double alpha) {
  check_b(b);
  if (!qi.same_shape(qj)) throw std::invalid_argument("compose_co: Q tables differ in shape");
  Table q(qi.rows(), qi.cols());
  for (std::size_t k = 0; k < q.data().size(); ++k)
    q.data()[k] = b * qi.data()[k] + (1.0 - b) * qj.data()[k];
  return make_composed(Method::co, std::move(q), alpha, {{"i", "j"}, {b, 1.0 - b}});
}

ComposedPolicy compose_co(const std::vector<Table>& qs, const TaskWeights& w, double alpha) {
  if (qs.empty() || qs.size() != w.size())
    throw std::invalid_argument("compose_co: one Q table per weight is required");
  Table q(qs.front().rows(), qs.front().cols(), 0.0);
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (!qs[k].same_shape(q)) throw std::invalid_argument("compose_co: Q tables differ in shape");
    for (std::size_t idx = 0; idx < q.data().size(); ++idx) q.data()[idx] += w[k] * qs[k].data()[idx];
  }
  return make_composed(Method::co, std::move(q), alpha,
                       {default_base_names(qs.size()), {w.values().begin(), w.values().end()}});
}

ComposedPolicy compose_gpi(const std::vector<SuccessorFeatures>& sfs, const TaskWeights& w, double alpha) {
  if (sfs.empty()) throw std::invalid_argument("compose_gpi: no successor features given");
  const SuccessorFeatures& first = sfs.front();
  Table q(first.num_states, first.num_actions, -std::numeric_limits<double>::infinity());
  std::size_t iterations = 0;
  for (const SuccessorFeatures& sf : sfs) {
    if (sf.num_states != first.num_states || sf.num_actions != first.num_actions ||
        sf.feature_dim != first.feature_dim)
      throw std::invalid_argument("compose_gpi: successor features differ in shape");
    if (sf.alpha != alpha) throw std::invalid_argument("compose_gpi: successor features computed at a different alpha");
    const Table qk = sf.action_values(w);
    for (std::size_t idx = 0; idx < q.data().size(); ++idx)
      q.data()[idx] = std::max(q.data()[idx], qk.data()[idx]);
    iterations += sf.iterations_used;
  }
  ComposedPolicy out = make_composed(Method::gpi, std::move(q), alpha,
                                     {default_base_names(sfs.size()), {w.values().begin(), w.values().end()}});
  out.iterations_used = iterations;
  return out;
}

Table dc_sweep(const TabularMdp& mdp, const std::vector<Policy>& policies, const TaskWeights& w,
               const Table& c, double alpha) {
  check_policies(mdp, policies, w);
  const Table log_product = weighted_log_product(policies, w);
  return apply_dc_backup(mdp, log_partition_of_product(log_product, c, alpha), alpha);
}

CorrectionTable dc_n_fixed_point(const TabularMdp& mdp, const std::vector<Policy>& policies,
                                 const TaskWeights& w, const SolveConfig& cfg) {
  cfg.check();
  check_policies(mdp, policies, w);
  const Table log_product = weighted_log_product(policies, w);

  CorrectionTable out;
  out.weights.assign(w.values().begin(), w.values().end());
  out.alpha = cfg.alpha;
  out.c = Table(mdp.num_states(), mdp.num_actions(), 0.0);
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < cfg.max_iterations) {
    Table next = apply_dc_backup(mdp, log_partition_of_product(log_product, out.c, cfg.alpha), cfg.alpha);
    residual = max_abs_diff(next, out.c);
    out.c = std::move(next);
    ++it;
    if (residual <= cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations_used = it;
  out.residual = residual;
  return out;
}

CorrectionTable dc_fixed_point(const TabularMdp& mdp, const Policy& pi_i, const Policy& pi_j, double b,
                               const SolveConfig& cfg) {
  check_b(b);
  return dc_n_fixed_point(mdp, {pi_i, pi_j}, TaskWeights::from_b(b), cfg);
}

ComposedPolicy compose_dc(const Table& qi, const Table& qj, const CorrectionTable& c, double b) {
  check_b(b);
  if (c.weights.size() != 2 || std::abs(c.weights[0] - b) > 1e-12)
    throw std::invalid_argument("compose_dc: correction table was computed for a different b");
  if (!qi.same_shape(qj) || !qi.same_shape(c.c))
    throw std::invalid_argument("compose_dc: table shapes differ");
  Table q(qi.rows(), qi.cols());
  for (std::size_t k = 0; k < q.data().size(); ++k)
    q.data()[k] = b * qi.data()[k] + (1.0 - b) * qj.data()[k] - c.c.data()[k];
  ComposedPolicy out = make_composed(c.heuristic ? Method::dc_cheap : Method::dc, std::move(q), c.alpha,
                                     {{"i", "j"}, {b, 1.0 - b}});
  out.iterations_used = c.iterations_used;
  return out;
}

ComposedPolicy compose_dc(const std::vector<Table>& qs, const CorrectionTable& c, const TaskWeights& w) {
  if (qs.size() != w.size() || c.weights.size() != w.size())
    throw std::invalid_argument("compose_dc: one Q table per weight is required");
  for (std::size_t k = 0; k < w.size(); ++k)
    if (std::abs(c.weights[k] - w[k]) > 1e-12)
      throw std::invalid_argument("compose_dc: correction table was computed for different weights");
  Table q(c.c.rows(), c.c.cols(), 0.0);
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (!qs[k].same_shape(q)) throw std::invalid_argument("compose_dc: table shapes differ");
    for (std::size_t idx = 0; idx < q.data().size(); ++idx) q.data()[idx] += w[k] * qs[k].data()[idx];
  }
  for (std::size_t idx = 0; idx < q.data().size(); ++idx) q.data()[idx] -= c.c.data()[idx];
  ComposedPolicy out = make_composed(c.heuristic ? Method::dc_cheap : Method::dc, std::move(q), c.alpha,
                                     {default_base_names(qs.size()), c.weights});
  out.iterations_used = c.iterations_used;
  return out;
}

CorrectionTable dc_cheap(const CorrectionTable& c_half, double b) {
  check_b(b);
  if (c_half.weights.size() != 2 || c_half.weights[0] != 0.5 || c_half.weights[1] != 0.5)
    throw std::invalid_argument("dc_cheap: correction must have been computed at b = 1/2");
  CorrectionTable out = c_half;
  const double scale = 4.0 * b * (1.0 - b);
  for (double& v : out.c.data()) v *= scale;
  out.weights = {b, 1.0 - b};
  out.heuristic = true;
  return out;
}

ComposedPolicy dc_cheap_gpi(const ComposedPolicy& co, const CorrectionTable& c_cheap,
                            const ComposedPolicy& gpi) {
  if (co.alpha != gpi.alpha || co.alpha != c_cheap.alpha)
    throw std::invalid_argument("dc_cheap_gpi: inputs were computed at different alpha");
  if (!co.q.same_shape(gpi.q) || !co.q.same_shape(c_cheap.c))
    throw std::invalid_argument("dc_cheap_gpi: table shapes differ");
  Table q(co.q.rows(), co.q.cols());
  for (std::size_t k = 0; k < q.data().size(); ++k)
    q.data()[k] = std::max(co.q.data()[k] - c_cheap.c.data()[k], gpi.q.data()[k]);
  ComposedPolicy out = make_composed(Method::dc_cheap_gpi, std::move(q), co.alpha, co.provenance);
  out.iterations_used = c_cheap.iterations_used + gpi.iterations_used;
  return out;
}

ComposedPolicy compose_condq(const TabularMdp& mdp, const TaskWeights& w, const SolveConfig& cfg) {
  SoftSolution sol = soft_value_iteration(mdp, w, cfg);
  ComposedPolicy out;
  out.method = Method::condq;
  out.q = std::move(sol.q);
  out.policy = std::move(sol.policy);
  out.alpha = cfg.alpha;
  out.provenance = {{"direct"}, {w.values().begin(), w.values().end()}};
  out.iterations_used = sol.iterations_used;
  if (!sol.converged) require_converged(false, sol.residual, sol.iterations_used, "condq solve");
  return out;
}

double renyi_divergence(std::span<const double> log_p, std::span<const double> log_q, double b) {
  if (log_p.size() != log_q.size()) throw std::invalid_argument("renyi_divergence: size mismatch");
  check_b(b);
  if (b == 1.0) {
    double kl = 0.0;
    for (std::size_t a = 0; a < log_p.size(); ++a)
      if (log_p[a] != kNegInf) kl += std::exp(log_p[a]) * (log_p[a] - log_q[a]);
    return kl;
  }
  std::vector<double> terms(log_p.size());
  for (std::size_t a = 0; a < log_p.size(); ++a) {
    // p^0 = 1 everywhere, matching the convention of the DC recursion.
    const double lp = b == 0.0 ? 0.0 : log_p[a];
    terms[a] = (lp == kNegInf || log_q[a] == kNegInf) ? kNegInf : b * lp + (1.0 - b) * log_q[a];
  }
  return log_sum_exp(terms) / (b - 1.0);
}

Table renyi_correction_step(const TabularMdp& mdp, const Policy& pi_i, const Policy& pi_j, double b,
                            double alpha) {
  check_b(b);
  std::vector<double> weighted(mdp.num_states(), 0.0);
  if (b != 1.0) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
      weighted[s] = (1.0 - b) * renyi_divergence(pi_i.log_prob.row(s), pi_j.log_prob.row(s), b);
  }
  Table out(mdp.num_states(), mdp.num_actions());
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double e = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a)) e += o.prob * weighted[o.next];
      out(s, a) = mdp.gamma() * alpha * e;
    }
  return out;
}

}  // namespace entropic
