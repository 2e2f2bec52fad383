#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "entropic/mdp.hpp"
#include "entropic/soft_solver.hpp"
#include "entropic/table.hpp"

namespace entropic {

/// Transfer methods.
///
///   method        optimal  bounded loss  needs phi  needs f(s,a|b)
///   CO            -        -             -          -
///   GPI           -        yes           yes        -
///   DC            yes      n/a           -          yes
///   DC_CHEAP      -        -             -          - (C at b=1/2 only)
///   DC_CHEAP_GPI  -        yes (>= GPI)  yes        - (C at b=1/2 only)
///   CONDQ         yes      n/a           yes        yes
enum class Method { co, gpi, dc, dc_cheap, dc_cheap_gpi, condq };

/// Kebab-case CLI spelling: co, gpi, dc, dc-cheap, dc-cheap-gpi, condq.
std::string method_name(Method m);
/// Upper-case tag used in JSON: CO, GPI, DC, DC_CHEAP, DC_CHEAP_GPI, CONDQ.
std::string method_tag(Method m);
/// Accepts either spelling. Throws std::invalid_argument listing the valid names.
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

/// Divergence correction C(s,a) for one task weighting.
struct CorrectionTable {
  Table c;
  std::vector<double> weights;  // (b, 1-b) for the two-policy case
  double alpha = 1.0;
  std::size_t iterations_used = 0;
  bool converged = false;
  double residual = 0.0;
  bool heuristic = false;
};

struct Provenance {
  std::vector<std::string> bases;
  std::vector<double> weights;
};

struct ComposedPolicy {
  Method method = Method::co;
  Table q;
  Policy policy;
  double alpha = 1.0;
  Provenance provenance;
  std::size_t iterations_used = 0;
};

/// Q = b Qi + (1-b) Qj, acting with its Boltzmann policy.
ComposedPolicy compose_co(const Table& qi, const Table& qj, double b, double alpha);
/// Q = sum_k w_k Q_k.
ComposedPolicy compose_co(const std::vector<Table>& qs, const TaskWeights& w, double alpha);

/// Max-ent GPI: Q(s,a) = max_i psi_i(s,a).w, pi proportional to exp(Q/alpha).
ComposedPolicy compose_gpi(const std::vector<SuccessorFeatures>& sfs, const TaskWeights& w, double alpha);

/// Fixed point of C(s,a) = -alpha gamma E_{s'}[log sum_{a'} pi_i^b pi_j^(1-b) exp(-C(s',a')/alpha)]
/// starting from C = 0.
CorrectionTable dc_fixed_point(const TabularMdp& mdp, const Policy& pi_i, const Policy& pi_j, double b,
                               const SolveConfig& cfg);

/// N-policy correction with the weighted product prod_k pi_k^{w_k}.
CorrectionTable dc_n_fixed_point(const TabularMdp& mdp, const std::vector<Policy>& policies,
                                 const TaskWeights& w, const SolveConfig& cfg);

/// Q = b Qi + (1-b) Qj - C. Tagged DC_CHEAP when `c` is heuristic.
ComposedPolicy compose_dc(const Table& qi, const Table& qj, const CorrectionTable& c, double b);
/// Q = sum_k w_k Q_k - C.
ComposedPolicy compose_dc(const std::vector<Table>& qs, const CorrectionTable& c, const TaskWeights& w);

/// 4 b (1-b) C_{1/2}. `c_half` must have been computed at b = 1/2.
CorrectionTable dc_cheap(const CorrectionTable& c_half, double b);

/// max(Q_CO - C_cheap, Q_GPI) elementwise. All inputs must share alpha.
ComposedPolicy dc_cheap_gpi(const ComposedPolicy& co, const CorrectionTable& c_cheap,
                            const ComposedPolicy& gpi);

/// Direct solve on r_w (the tabular stand-in for a conditional Q).
ComposedPolicy compose_condq(const TabularMdp& mdp, const TaskWeights& w, const SolveConfig& cfg);

/// Renyi divergence of order b between two action distributions given as
/// log-probabilities. b = 1 gives KL(p||q).
double renyi_divergence(std::span<const double> log_p, std::span<const double> log_q, double b);

/// First DC iterate from the divergence form:
/// gamma alpha E_{s'}[(1-b) R_b(pi_i(.|s') || pi_j(.|s'))].
Table renyi_correction_step(const TabularMdp& mdp, const Policy& pi_i, const Policy& pi_j, double b,
                            double alpha);

/// One sweep of the DC recursion applied to `c` (exposed for checking the
/// divergence form against the recursion).
Table dc_sweep(const TabularMdp& mdp, const std::vector<Policy>& policies, const TaskWeights& w,
               const Table& c, double alpha);

}  // namespace entropic
