#include "entropic/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entropic {

namespace {

// JSON has no infinities; -inf log-probabilities are written as null.
Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from(const Json& j) {
  if (j.is_null()) return -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

std::vector<double> vector_from(const Json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const Json& x : j) v.push_back(number_from(x));
  return v;
}

Json vector_to(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

}  // namespace

std::string boundary_name(BoundaryMode m) { return m == BoundaryMode::stay ? "stay" : "clamp"; }

BoundaryMode parse_boundary(const std::string& name) {
  if (name == "stay") return BoundaryMode::stay;
  if (name == "clamp") return BoundaryMode::clamp;
  throw std::invalid_argument("unknown boundary mode '" + name + "' (expected stay or clamp)");
}

Json task_to_json(const GridSpec& spec, double gamma) {
  Json features = Json::array();
  for (const RewardCell& c : spec.reward_cells)
    features.push_back({{"col", c.col}, {"row", c.row}, {"dim", c.dim}, {"value", c.value}});
  return {{"width", spec.width},
          {"height", spec.height},
          {"boundary", boundary_name(spec.boundary)},
          {"gamma", gamma},
          {"features", features}};
}

Task task_from_json(const Json& j, const std::string& name) {
  try {
    GridSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.boundary = parse_boundary(j.at("boundary").get<std::string>());
    const double gamma = j.at("gamma").get<double>();
    std::size_t dim = 1;
    for (const Json& f : j.at("features")) {
      RewardCell c;
      c.col = f.at("col").get<int>();
      c.row = f.at("row").get<int>();
      c.dim = f.at("dim").get<std::size_t>();
      c.value = f.at("value").get<double>();
      dim = std::max(dim, c.dim + 1);
      spec.reward_cells.push_back(c);
    }
    if (j.contains("feature_dim")) dim = j.at("feature_dim").get<std::size_t>();
    TabularMdp mdp = build_grid_world(spec, dim, gamma);
    return Task{name, "grid world loaded from JSON", std::move(mdp),
                GridLayout{spec.width, spec.height, diagonal_moves()}, kSuiteAlpha, spec};
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed task document: ") + e.what());
  }
}

Task resolve_task(const std::string& source, std::optional<double> gamma) {
  const auto names = builtin_task_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) {
    if (!gamma) return build_task(source);
    if (source == "pointmass") return build_pointmass_task(kPointMassResolution, *gamma);
    return build_task_suite(source, *gamma);
  }
  std::ifstream probe(source);
  if (!probe) {
    std::ostringstream msg;
    msg << "task '" << source << "' is neither a built-in task (";
    for (std::size_t k = 0; k < names.size(); ++k) msg << (k ? ", " : "") << names[k];
    msg << ") nor a readable JSON file";
    throw std::invalid_argument(msg.str());
  }
  Json j = read_json_file(source);
  if (gamma) j["gamma"] = *gamma;
  return task_from_json(j, source);
}

Json table_to_json(const Table& t) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) rows.push_back(vector_to(t.row(r)));
  return rows;
}

Table table_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("table must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Table t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw std::invalid_argument("table rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = number_from(j[r][c]);
  }
  return t;
}

Json policy_to_json(const Policy& p) {
  return {{"prob", table_to_json(p.prob)}, {"log_prob", table_to_json(p.log_prob)}};
}

Policy policy_from_json(const Json& j) {
  Policy p{table_from_json(j.at("prob")), table_from_json(j.at("log_prob"))};
  if (!p.prob.same_shape(p.log_prob)) throw std::invalid_argument("policy prob and log_prob differ in shape");
  return p;
}

Json solution_to_json(const SoftSolution& s) {
  return {{"alpha", s.alpha},
          {"num_states", s.q.rows()},
          {"num_actions", s.q.cols()},
          {"iterations_used", s.iterations_used},
          {"converged", s.converged},
          {"residual", s.residual},
          {"q", table_to_json(s.q)},
          {"v", vector_to(s.v)},
          {"log_partition", vector_to(s.log_partition)},
          {"policy", policy_to_json(s.policy)}};
}

SoftSolution solution_from_json(const Json& j) {
  try {
    SoftSolution s;
    s.alpha = j.at("alpha").get<double>();
    s.iterations_used = j.at("iterations_used").get<std::size_t>();
    s.converged = j.at("converged").get<bool>();
    s.residual = j.at("residual").get<double>();
    s.q = table_from_json(j.at("q"));
    s.v = vector_from(j.at("v"));
    s.log_partition = vector_from(j.at("log_partition"));
    s.policy = policy_from_json(j.at("policy"));
    if (s.q.rows() != j.at("num_states").get<std::size_t>() || s.q.cols() != j.at("num_actions").get<std::size_t>())
      throw std::invalid_argument("solution shape does not match num_states/num_actions");
    return s;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed solution document: ") + e.what());
  }
}

Json composed_to_json(const ComposedPolicy& c) {
  return {{"method", method_tag(c.method)},
          {"alpha", c.alpha},
          {"num_states", c.q.rows()},
          {"num_actions", c.q.cols()},
          {"iterations_used", c.iterations_used},
          {"provenance", {{"bases", c.provenance.bases}, {"weights", c.provenance.weights}}},
          {"q", table_to_json(c.q)},
          {"policy", policy_to_json(c.policy)}};
}

ComposedPolicy composed_from_json(const Json& j) {
  try {
    ComposedPolicy c;
    c.method = parse_method(j.at("method").get<std::string>());
    c.alpha = j.at("alpha").get<double>();
    c.iterations_used = j.at("iterations_used").get<std::size_t>();
    c.provenance.bases = j.at("provenance").at("bases").get<std::vector<std::string>>();
    c.provenance.weights = j.at("provenance").at("weights").get<std::vector<double>>();
    c.q = table_from_json(j.at("q"));
    c.policy = policy_from_json(j.at("policy"));
    return c;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed composed-policy document: ") + e.what());
  }
}

Json mixture_to_json(const gauss::TruncatedNormalMixture& q) {
  return {{"dim", q.dim},
          {"weights", q.weights},
          {"means", q.means},
          {"scales", q.scales},
          {"uniform_component", q.uniform_component}};
}

gauss::TruncatedNormalMixture mixture_from_json(const Json& j) {
  try {
    gauss::TruncatedNormalMixture q;
    q.dim = j.at("dim").get<std::size_t>();
    q.weights = j.at("weights").get<std::vector<double>>();
    q.means = j.at("means").get<std::vector<std::vector<double>>>();
    q.scales = j.at("scales").get<std::vector<std::vector<double>>>();
    q.uniform_component = j.at("uniform_component").get<bool>();
    q.check();
    return q;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed mixture document: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace entropic
