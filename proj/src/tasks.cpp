#include <stdexcept>
#include <string>

#include "entropic/mdp.hpp"

namespace entropic {

namespace {

constexpr int kSuiteSize = 8;

// Point-mass reward regions on [-1,1]^2 as {x_lo, x_hi, y_lo, y_hi}.
struct Region {
  double x_lo, x_hi, y_lo, y_hi;
  bool contains(double x, double y) const { return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi; }
};
constexpr Region kGreen{-1.0, -0.6, -0.2, 0.2};
constexpr Region kRed{-0.2, 0.2, -1.0, -0.6};
constexpr Region kYellow{0.6, 1.0, 0.6, 1.0};

double cell_center(int index, int resolution) {
  return -1.0 + (index + 0.5) * 2.0 / resolution;
}

GridSpec pointmass_spec(int resolution) {
  if (resolution < 5) throw std::invalid_argument("pointmass: resolution must be at least 5");
  GridSpec spec{resolution, resolution, BoundaryMode::clamp, {}};
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const double x = cell_center(col, resolution);
      const double y = cell_center(row, resolution);
      if (kGreen.contains(x, y)) spec.reward_cells.push_back({col, row, 0, 1.0});
      if (kRed.contains(x, y)) spec.reward_cells.push_back({col, row, 1, 1.0});
      if (kYellow.contains(x, y)) {
        spec.reward_cells.push_back({col, row, 0, 0.75});
        spec.reward_cells.push_back({col, row, 1, 0.75});
      }
    }
  }
  return spec;
}

}  // namespace

GridSpec task_suite_spec(const std::string& name) {
  GridSpec spec{kSuiteSize, kSuiteSize, BoundaryMode::clamp, {}};
  if (name == "LR") {
    for (int r = 0; r < kSuiteSize; ++r) {
      spec.reward_cells.push_back({0, r, 0, 1.0});
      spec.reward_cells.push_back({kSuiteSize - 1, r, 1, 1.0});
    }
  } else if (name == "LU") {
    for (int r = 0; r < kSuiteSize; ++r) spec.reward_cells.push_back({0, r, 0, 1.0});
    for (int c = 0; c < kSuiteSize; ++c) spec.reward_cells.push_back({c, kSuiteSize - 1, 1, 1.0});
  } else if (name == "T") {
    // Each base task owns a diagonal pair of +1 cells in the bottom-left
    // so it can collect +1 on every step there under clamped boundaries.
    spec.reward_cells = {
        {0, 1, 0, 1.0},  {1, 2, 0, 1.0},  {1, 0, 1, 1.0},  {2, 1, 1, 1.0},
        {7, 7, 0, 0.75}, {7, 7, 1, 0.75},
    };
  } else {
    throw std::invalid_argument("unknown task suite '" + name + "' (expected LR, LU or T)");
  }
  return spec;
}

Task build_task_suite(const std::string& name, double gamma) {
  GridSpec spec = task_suite_spec(name);
  std::string description;
  if (name == "LR") {
    description = "left-right: feature 0 on column 0, feature 1 on column 7 (incompatible tasks)";
  } else if (name == "LU") {
    description = "left-up: feature 0 on column 0, feature 1 on row 7 (compatible tasks)";
  } else {
    description =
        "tricky: non-overlapping +1 rewards in the bottom-left corner, shared 0.75 reward at (7,7)";
  }
  TabularMdp mdp = build_grid_world(spec, 2, gamma);
  return Task{name, std::move(description), std::move(mdp),
              GridLayout{spec.width, spec.height, diagonal_moves()}, kSuiteAlpha, spec};
}

TabularMdp build_pointmass_grid(int resolution, double gamma) {
  return build_grid(pointmass_spec(resolution), king_moves(), 2, gamma);
}

Task build_pointmass_task(int resolution, double gamma) {
  return Task{"pointmass",
              "discretised point mass: green (1,0) left, red (0,1) bottom, yellow (0.75,0.75) top-right",
              build_pointmass_grid(resolution, gamma),
              GridLayout{resolution, resolution, king_moves()},
              kPointMassAlpha,
              std::nullopt};
}

std::vector<std::size_t> pointmass_yellow_states(int resolution) {
  std::vector<std::size_t> out;
  for (int row = 0; row < resolution; ++row)
    for (int col = 0; col < resolution; ++col)
      if (kYellow.contains(cell_center(col, resolution), cell_center(row, resolution)))
        out.push_back(static_cast<std::size_t>(row * resolution + col));
  return out;
}

std::vector<std::string> builtin_task_names() { return {"LR", "LU", "T", "pointmass"}; }

Task build_task(const std::string& name) {
  if (name == "pointmass") return build_pointmass_task();
  return build_task_suite(name);
}

}  // namespace entropic
