#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "entropic/composer.hpp"
#include "entropic/mdp.hpp"
#include "entropic/soft_solver.hpp"

namespace entropic {

/// Start distribution used to average values into a scalar regret.
enum class StartMode { uniform, center, explicit_list };

struct StartSpec {
  StartMode mode = StartMode::uniform;
  std::vector<std::size_t> states;  // used by explicit_list

  static StartSpec uniform() { return {}; }
  static StartSpec center() { return {StartMode::center, {}}; }
  static StartSpec explicit_states(std::vector<std::size_t> s) { return {StartMode::explicit_list, std::move(s)}; }
};

std::string start_mode_name(StartMode m);
StartMode parse_start_mode(const std::string& name);

/// States averaged over. `center` needs a layout.
std::vector<std::size_t> start_states(const StartSpec& start, std::size_t num_states,
                                      const std::optional<GridLayout>& layout);

struct ResultRow {
  std::string task;
  Method method = Method::co;
  double b = 0.0;
  double regret = 0.0;  // value_optimal - value_method
  double value_optimal = 0.0;
  double value_method = 0.0;
  std::size_t solver_iterations = 0;
  double wall_time_ms = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Transfer between feature i (weight b) and feature j (weight 1 - b) on one
/// MDP. Base solutions, successor features and the b = 1/2 correction are
/// computed once and cached; the per-b oracle is cached too. All public
/// members are safe to call from several threads.
class TransferEvaluator {
 public:
  TransferEvaluator(TabularMdp mdp, SolveConfig cfg, std::size_t feature_i = 0, std::size_t feature_j = 1,
                    std::optional<GridLayout> layout = std::nullopt);

  const TabularMdp& mdp() const { return mdp_; }
  const SolveConfig& config() const { return cfg_; }
  TaskWeights weights(double b) const;

  /// Base solution for feature i (k = 0) or j (k = 1).
  const SoftSolution& base(std::size_t k) const;
  const SuccessorFeatures& successor_features(std::size_t k) const;
  /// Soft VI on r_b.
  std::shared_ptr<const SoftSolution> oracle(double b) const;

  /// The method's composed policy for weight b. Throws ConvergenceError if
  /// any fixed point it relies on did not converge.
  ComposedPolicy compose(Method method, double b) const;

  /// Exact max-ent value of `policy` on r_b per state.
  std::vector<double> evaluate(const Policy& policy, double b) const;

  ResultRow regret(Method method, double b, const StartSpec& start, const std::string& task_name = "") const;

 private:
  void ensure_bases() const;
  const CorrectionTable& correction_half() const;

  TabularMdp mdp_;
  SolveConfig cfg_;
  std::size_t i_;
  std::size_t j_;
  std::optional<GridLayout> layout_;

  mutable std::once_flag bases_once_;
  mutable std::vector<SoftSolution> bases_;
  mutable std::vector<SuccessorFeatures> sfs_;
  mutable std::once_flag half_once_;
  mutable CorrectionTable c_half_;
  mutable std::mutex oracle_mutex_;
  mutable std::map<double, std::shared_ptr<const SoftSolution>> oracles_;
};

/// One-shot regret for a single (method, b) on features (0, 1).
ResultRow regret(const TabularMdp& mdp, Method method, double b, const SolveConfig& cfg,
                 const StartSpec& start = {}, const std::optional<GridLayout>& layout = std::nullopt);

struct SweepSpec {
  std::vector<std::string> tasks;
  std::vector<Method> methods;
  std::vector<double> b_grid;
  /// Tolerance and iteration cap; alpha is replaced by the task's
  /// recommended alpha unless `alpha` is set.
  SolveConfig cfg;
  std::optional<double> alpha;
  StartSpec start;
  std::size_t feature_i = 0;
  std::size_t feature_j = 1;
  std::size_t jobs = 1;
  bool record_wall_time = false;
  std::string output_path;

  /// Throws std::invalid_argument for an empty task/method list or a b
  /// outside [0, 1].
  void check() const;
};

/// Default b grid 0, 0.1, ..., 1 (computed as k / 10).
std::vector<double> default_b_grid();

/// Rows for tasks x methods x b, ordered by task and method as listed and b
/// ascending. Tasks are resolved with resolve_task (built-in name or JSON
/// path). Output does not depend on `jobs`.
std::vector<ResultRow> sweep(const SweepSpec& spec);

/// Per-state (1 - b) R_b(pi_i(.|s) || pi_j(.|s)).
std::vector<double> divergence_map(const Policy& pi_i, const Policy& pi_j, double b);

/// log10(max(regret, 1e-12)).
double log_regret(double regret);

inline constexpr const char* kCsvHeader =
    "task,method,b,regret,value_optimal,value_method,solver_iterations,wall_time_ms";

std::string format_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& text);
std::vector<ResultRow> read_csv(const std::string& path);

/// JSON array mirror of the CSV rows.
std::string format_rows_json(const std::vector<ResultRow>& rows);

}  // namespace entropic
