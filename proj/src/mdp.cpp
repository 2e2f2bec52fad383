#include "entropic/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace entropic {

namespace {

constexpr double kStochasticTol = 1e-12;

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, std::size_t feature_dim,
                       std::vector<std::vector<Outcome>> transitions, double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      feature_dim_(feature_dim),
      transitions_(std::move(transitions)),
      gamma_(gamma) {
  if (num_states_ == 0 || num_actions_ == 0 || feature_dim_ == 0)
    throw std::invalid_argument("TabularMdp: state, action and feature counts must be positive");
  if (transitions_.size() != num_states_ * num_actions_)
    throw std::invalid_argument("TabularMdp: expected one outcome list per (state, action)");
}

double TabularMdp::expected_reward(std::size_t s, std::size_t a, std::span<const double> w) const {
  double r = 0.0;
  for (const Outcome& o : outcomes(s, a)) {
    double dot = 0.0;
    for (std::size_t k = 0; k < feature_dim_; ++k) dot += o.phi[k] * w[k];
    r += o.prob * dot;
  }
  return r;
}

std::vector<double> TabularMdp::expected_features(std::size_t s, std::size_t a) const {
  std::vector<double> f(feature_dim_, 0.0);
  for (const Outcome& o : outcomes(s, a))
    for (std::size_t k = 0; k < feature_dim_; ++k) f[k] += o.prob * o.phi[k];
  return f;
}

TaskWeights::TaskWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw std::invalid_argument("TaskWeights: empty weight vector");
  double sum = 0.0;
  for (double v : w_) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("TaskWeights: entries must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTol)
    throw std::invalid_argument("TaskWeights: entries must sum to 1");
}

TaskWeights TaskWeights::from_b(double b) {
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("TaskWeights: b must lie in [0, 1]");
  return TaskWeights({b, 1.0 - b});
}

TaskWeights TaskWeights::one_hot(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::invalid_argument("TaskWeights: one-hot index out of range");
  std::vector<double> w(dim, 0.0);
  w[index] = 1.0;
  return TaskWeights(std::move(w));
}

TaskWeights TaskWeights::pair(std::size_t dim, std::size_t i, std::size_t j, double b) {
  if (i >= dim || j >= dim || i == j)
    throw std::invalid_argument("TaskWeights: pair indices must be distinct and in range");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("TaskWeights: b must lie in [0, 1]");
  std::vector<double> w(dim, 0.0);
  w[i] = b;
  w[j] = 1.0 - b;
  return TaskWeights(std::move(w));
}

std::vector<Violation> validate(const TabularMdp& mdp) {
  std::vector<Violation> out;
  if (!(mdp.gamma() >= 0.0 && mdp.gamma() < 1.0)) {
    std::ostringstream msg;
    msg << "discount " << mdp.gamma() << " outside [0, 1)";
    out.push_back({std::nullopt, std::nullopt, msg.str()});
  }
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      double sum = 0.0;
      bool negative = false;
      bool bad_next = false;
      bool bad_phi = false;
      for (const Outcome& o : mdp.outcomes(s, a)) {
        if (!(o.prob >= 0.0)) negative = true;
        sum += o.prob;
        if (o.next >= mdp.num_states()) bad_next = true;
        if (o.phi.size() != mdp.feature_dim()) {
          bad_phi = true;
        } else {
          for (double v : o.phi)
            if (!std::isfinite(v)) bad_phi = true;
        }
      }
      if (negative) out.push_back({s, a, "negative transition probability"});
      if (!(std::abs(sum - 1.0) <= kStochasticTol)) {
        std::ostringstream msg;
        msg << "transition probabilities sum to " << sum;
        out.push_back({s, a, msg.str()});
      }
      if (bad_next) out.push_back({s, a, "next state out of range"});
      if (bad_phi) out.push_back({s, a, "feature vector not finite or wrong dimension"});
    }
  }
  return out;
}

const std::vector<Move>& diagonal_moves() {
  static const std::vector<Move> moves{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  return moves;
}

const std::vector<Move>& king_moves() {
  static const std::vector<Move> moves = [] {
    std::vector<Move> m;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) m.emplace_back(dx, dy);
    return m;
  }();
  return moves;
}

TabularMdp build_grid(const GridSpec& spec, const std::vector<Move>& moves,
                      std::size_t feature_dim, double gamma) {
  if (spec.width <= 0 || spec.height <= 0)
    throw std::invalid_argument("grid: width and height must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("grid: gamma must lie in [0, 1)");
  if (feature_dim == 0) throw std::invalid_argument("grid: feature_dim must be positive");
  if (moves.empty()) throw std::invalid_argument("grid: empty action set");

  const auto width = static_cast<std::size_t>(spec.width);
  const std::size_t num_states = width * static_cast<std::size_t>(spec.height);
  std::vector<std::vector<double>> cell_phi(num_states, std::vector<double>(feature_dim, 0.0));
  for (const RewardCell& rc : spec.reward_cells) {
    if (rc.col < 0 || rc.col >= spec.width || rc.row < 0 || rc.row >= spec.height) {
      std::ostringstream msg;
      msg << "grid: reward cell (" << rc.col << "," << rc.row << ") out of bounds";
      throw std::invalid_argument(msg.str());
    }
    if (rc.dim >= feature_dim) throw std::invalid_argument("grid: reward cell feature index out of range");
    if (!std::isfinite(rc.value)) throw std::invalid_argument("grid: reward value not finite");
    cell_phi[static_cast<std::size_t>(rc.row) * width + static_cast<std::size_t>(rc.col)][rc.dim] +=
        rc.value;
  }

  std::vector<std::vector<Outcome>> transitions;
  transitions.reserve(num_states * moves.size());
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      for (const auto& [dx, dy] : moves) {
        int nc = col + dx;
        int nr = row + dy;
        const bool outside = nc < 0 || nc >= spec.width || nr < 0 || nr >= spec.height;
        if (spec.boundary == BoundaryMode::stay) {
          if (outside) {
            nc = col;
            nr = row;
          }
        } else {
          nc = std::clamp(nc, 0, spec.width - 1);
          nr = std::clamp(nr, 0, spec.height - 1);
        }
        const std::size_t next = static_cast<std::size_t>(nr) * width + static_cast<std::size_t>(nc);
        transitions.push_back({Outcome{next, 1.0, cell_phi[next]}});
      }
    }
  }
  return TabularMdp(num_states, moves.size(), feature_dim, std::move(transitions), gamma);
}

TabularMdp build_grid_world(const GridSpec& spec, std::size_t feature_dim, double gamma) {
  return build_grid(spec, diagonal_moves(), feature_dim, gamma);
}

std::vector<std::size_t> greedy_rollout(const TabularMdp& mdp, const Table& q, std::size_t start,
                                        std::size_t steps) {
  if (q.rows() != mdp.num_states() || q.cols() != mdp.num_actions())
    throw std::invalid_argument("greedy_rollout: Q shape does not match the MDP");
  std::vector<std::size_t> path{start};
  std::size_t s = start;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = q.row(s);
    const auto a = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto outs = mdp.outcomes(s, a);
    const auto best = std::max_element(outs.begin(), outs.end(),
                                       [](const Outcome& x, const Outcome& y) { return x.prob < y.prob; });
    s = best->next;
    path.push_back(s);
  }
  return path;
}

}  // namespace entropic
