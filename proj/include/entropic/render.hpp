#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entropic/mdp.hpp"
#include "entropic/soft_solver.hpp"

namespace entropic {

struct RenderOptions {
  std::string title;
  int cell_size = 48;
};

/// Grid picture: each cell shaded by `values` (white = min, dark = max) with,
/// when a policy is given, one arrow per action whose opacity equals the
/// action probability. A zero move is drawn as a circle. Arrow elements carry
/// data-state / data-action attributes.
std::string render_grid_svg(const GridLayout& layout, const std::vector<double>& values,
                            const std::optional<Policy>& policy, const RenderOptions& opts = {});

/// Scalar heatmap only (e.g. a divergence map).
std::string render_heatmap_svg(const GridLayout& layout, const std::vector<double>& values,
                               const RenderOptions& opts = {});

/// Plain-text (P2) greyscale PGM of `values`, one pixel per cell, top row first.
std::string render_pgm(const GridLayout& layout, const std::vector<double>& values);

}  // namespace entropic
