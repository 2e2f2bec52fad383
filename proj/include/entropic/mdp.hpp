#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entropic/table.hpp"

namespace entropic {

/// One reachable next state of a (s, a) pair, with the reward features
/// collected on that transition.
struct Outcome {
  std::size_t next = 0;
  double prob = 0.0;
  std::vector<double> phi;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Finite MDP with vector-valued reward features phi(s, a, s') and
/// discount gamma. Immutable once built. Structural shape is checked on
/// construction; semantic invariants (stochastic rows, finite features,
/// gamma < 1) are reported by validate().
class TabularMdp {
 public:
  TabularMdp(std::size_t num_states, std::size_t num_actions, std::size_t feature_dim,
             std::vector<std::vector<Outcome>> transitions, double gamma);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t feature_dim() const { return feature_dim_; }
  double gamma() const { return gamma_; }

  std::span<const Outcome> outcomes(std::size_t s, std::size_t a) const {
    return transitions_[s * num_actions_ + a];
  }

  /// Expected reward sum_{s'} p(s'|s,a) phi(s,a,s').w
  double expected_reward(std::size_t s, std::size_t a, std::span<const double> w) const;

  /// E_{s'}[phi(s,a,s')]
  std::vector<double> expected_features(std::size_t s, std::size_t a) const;

  friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t feature_dim_;
  std::vector<std::vector<Outcome>> transitions_;
  double gamma_;
};

/// Convex task weighting over the feature dimensions.
class TaskWeights {
 public:
  explicit TaskWeights(std::vector<double> w);

  /// Two-task shorthand: w = (b, 1 - b).
  static TaskWeights from_b(double b);
  /// One-hot weight on feature `index` of a `dim`-dimensional task.
  static TaskWeights one_hot(std::size_t dim, std::size_t index);
  /// Weight b on feature i and 1 - b on feature j (all others zero).
  static TaskWeights pair(std::size_t dim, std::size_t i, std::size_t j, double b);

  std::span<const double> values() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t k) const { return w_[k]; }

 private:
  std::vector<double> w_;
};

/// A check that failed in validate(); state/action are empty for
/// MDP-level checks (e.g. the discount).
struct Violation {
  std::optional<std::size_t> state;
  std::optional<std::size_t> action;
  std::string message;
};

std::vector<Violation> validate(const TabularMdp& mdp);

enum class BoundaryMode { stay, clamp };

struct RewardCell {
  int col = 0;
  int row = 0;
  std::size_t dim = 0;
  double value = 0.0;

  friend bool operator==(const RewardCell&, const RewardCell&) = default;
};

/// Grid world layout. Cell (col, row) has state index row * width + col;
/// row 0 is the bottom edge, col 0 the left edge.
struct GridSpec {
  int width = 1;
  int height = 1;
  BoundaryMode boundary = BoundaryMode::clamp;
  std::vector<RewardCell> reward_cells;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// A cell displacement (dx, dy) for one action.
using Move = std::pair<int, int>;

/// The diagonal action set in action-index order: NE, NW, SE, SW.
const std::vector<Move>& diagonal_moves();

/// Displacements {-1,0,1}^2 in row-major order (dy outer, dx inner).
const std::vector<Move>& king_moves();

/// Geometry needed to render or roll out a grid-shaped task.
struct GridLayout {
  int width = 1;
  int height = 1;
  std::vector<Move> moves;

  std::size_t state_of(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  std::pair<int, int> cell_of(std::size_t s) const {
    return {static_cast<int>(s % static_cast<std::size_t>(width)),
            static_cast<int>(s / static_cast<std::size_t>(width))};
  }
  std::size_t center_state() const { return state_of(width / 2, height / 2); }
};

/// Deterministic grid MDP over `moves`; reward features are those of the
/// arrival cell. Throws std::invalid_argument on a bad spec or gamma.
TabularMdp build_grid(const GridSpec& spec, const std::vector<Move>& moves,
                      std::size_t feature_dim, double gamma);

/// Grid world with the four diagonal moves.
TabularMdp build_grid_world(const GridSpec& spec, std::size_t feature_dim, double gamma);

/// A named benchmark task: the MDP plus what is needed to present it.
struct Task {
  std::string name;
  std::string description;
  TabularMdp mdp;
  GridLayout layout;
  /// Entropy temperature the benchmark is tuned for.
  double recommended_alpha = 0.1;
  /// Grid spec when the task is a diagonal grid world (for JSON export).
  std::optional<GridSpec> grid;
};

inline constexpr double kSuiteGamma = 0.95;
inline constexpr double kSuiteAlpha = 0.1;
inline constexpr double kPointMassGamma = 0.95;
inline constexpr double kPointMassAlpha = 0.3;
inline constexpr int kPointMassResolution = 15;

/// Reward layout of one of the 8x8 transfer suites: "LR", "LU" or "T".
GridSpec task_suite_spec(const std::string& name);

/// Builds an 8x8 two-feature suite. Throws std::invalid_argument for an
/// unknown name.
Task build_task_suite(const std::string& name, double gamma = kSuiteGamma);

/// Discretised point mass on [-1,1]^2: resolution^2 cells, 9 king moves,
/// clamped at the walls.
TabularMdp build_pointmass_grid(int resolution, double gamma);
Task build_pointmass_task(int resolution = kPointMassResolution, double gamma = kPointMassGamma);

/// Cells of the point-mass arena whose centre lies in the yellow
/// (shared-reward) region.
std::vector<std::size_t> pointmass_yellow_states(int resolution);

/// Names accepted by build_task(): LR, LU, T, pointmass.
std::vector<std::string> builtin_task_names();
Task build_task(const std::string& name);

/// Greedy rollout: follow argmax_a Q(s,a), taking the most likely successor.
std::vector<std::size_t> greedy_rollout(const TabularMdp& mdp, const Table& q, std::size_t start,
                                        std::size_t steps);

}  // namespace entropic
