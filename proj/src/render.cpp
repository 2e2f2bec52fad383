#include "entropic/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace entropic {

namespace {

void check_size(const GridLayout& layout, std::size_t n) {
  if (n != static_cast<std::size_t>(layout.width) * static_cast<std::size_t>(layout.height))
    throw std::invalid_argument("value count does not match the grid size");
}

std::pair<double, double> range_of(const std::vector<double>& v) {
  double lo = v.empty() ? 0.0 : v[0];
  double hi = lo;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return {lo, hi};
}

double scaled(double x, std::pair<double, double> r) {
  if (!(r.second > r.first) || !std::isfinite(x)) return 0.0;
  return std::clamp((x - r.first) / (r.second - r.first), 0.0, 1.0);
}

// White for the minimum through to a dark blue for the maximum.
std::string shade(double t) {
  const int r = static_cast<int>(std::lround(255.0 + t * (33.0 - 255.0)));
  const int g = static_cast<int>(std::lround(255.0 + t * (102.0 - 255.0)));
  const int b = static_cast<int>(std::lround(255.0 + t * (172.0 - 255.0)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string svg_open(const GridLayout& layout, const RenderOptions& opts) {
  const int title_h = opts.title.empty() ? 0 : 24;
  const int w = layout.width * opts.cell_size;
  const int h = layout.height * opts.cell_size + title_h;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
                    std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n";
  out += "<defs><marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" markerWidth=\"4\" "
         "markerHeight=\"4\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#b2182b\"/></marker></defs>\n";
  if (!opts.title.empty()) {
    std::string escaped;
    for (char c : opts.title) {
      if (c == '<') escaped += "&lt;";
      else if (c == '>') escaped += "&gt;";
      else if (c == '&') escaped += "&amp;";
      else escaped += c;
    }
    out += "<text x=\"4\" y=\"17\" font-family=\"sans-serif\" font-size=\"14\">" + escaped + "</text>\n";
  }
  return out;
}

// Top-left corner of a cell; row 0 is drawn at the bottom.
std::pair<double, double> cell_origin(const GridLayout& layout, std::size_t s, const RenderOptions& opts) {
  const auto [col, row] = layout.cell_of(s);
  const double top = opts.title.empty() ? 0.0 : 24.0;
  return {col * static_cast<double>(opts.cell_size),
          top + (layout.height - 1 - row) * static_cast<double>(opts.cell_size)};
}

void draw_cells(std::string& out, const GridLayout& layout, const std::vector<double>& values,
                const RenderOptions& opts) {
  const auto r = range_of(values);
  for (std::size_t s = 0; s < values.size(); ++s) {
    const auto [x, y] = cell_origin(layout, s, opts);
    out += "<rect class=\"cell\" data-state=\"" + std::to_string(s) + "\" x=\"" + num(x) + "\" y=\"" + num(y) +
           "\" width=\"" + std::to_string(opts.cell_size) + "\" height=\"" + std::to_string(opts.cell_size) +
           "\" fill=\"" + shade(scaled(values[s], r)) + "\" stroke=\"#999999\" stroke-width=\"0.5\" data-value=\"" +
           num(values[s]) + "\"/>\n";
  }
}

}  // namespace

std::string render_grid_svg(const GridLayout& layout, const std::vector<double>& values,
                            const std::optional<Policy>& policy, const RenderOptions& opts) {
  check_size(layout, values.size());
  if (policy && (policy->num_states() != values.size() || policy->num_actions() != layout.moves.size()))
    throw std::invalid_argument("policy shape does not match the grid layout");
  std::string out = svg_open(layout, opts);
  draw_cells(out, layout, values, opts);
  if (policy) {
    const double c = opts.cell_size;
    for (std::size_t s = 0; s < values.size(); ++s) {
      const auto [x, y] = cell_origin(layout, s, opts);
      const double cx = x + 0.5 * c;
      const double cy = y + 0.5 * c;
      for (std::size_t a = 0; a < layout.moves.size(); ++a) {
        const double p = policy->prob(s, a);
        const auto [dx, dy] = layout.moves[a];
        const std::string attrs = "data-state=\"" + std::to_string(s) + "\" data-action=\"" + std::to_string(a) +
                                  "\" data-prob=\"" + num(p) + "\"";
        if (dx == 0 && dy == 0) {
          out += "<circle class=\"arrow\" " + attrs + " cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" +
                 num(0.12 * c) + "\" fill=\"#b2182b\" fill-opacity=\"" + num(p) + "\"/>\n";
          continue;
        }
        const double len = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
        const double ex = cx + 0.4 * c * dx / len;
        const double ey = cy - 0.4 * c * dy / len;
        out += "<line class=\"arrow\" " + attrs + " x1=\"" + num(cx) + "\" y1=\"" + num(cy) + "\" x2=\"" + num(ex) +
               "\" y2=\"" + num(ey) + "\" stroke=\"#b2182b\" stroke-width=\"2\" stroke-opacity=\"" + num(p) +
               "\" marker-end=\"url(#head)\"/>\n";
      }
    }
  }
  out += "</svg>\n";
  return out;
}

std::string render_heatmap_svg(const GridLayout& layout, const std::vector<double>& values,
                               const RenderOptions& opts) {
  return render_grid_svg(layout, values, std::nullopt, opts);
}

std::string render_pgm(const GridLayout& layout, const std::vector<double>& values) {
  check_size(layout, values.size());
  const auto r = range_of(values);
  std::string out = "P2\n" + std::to_string(layout.width) + " " + std::to_string(layout.height) + "\n255\n";
  for (int row = layout.height - 1; row >= 0; --row) {
    for (int col = 0; col < layout.width; ++col) {
      const double t = scaled(values[layout.state_of(col, row)], r);
      out += std::to_string(static_cast<int>(std::lround(255.0 * (1.0 - t))));
      out += col + 1 < layout.width ? " " : "\n";
    }
  }
  return out;
}

}  // namespace entropic
