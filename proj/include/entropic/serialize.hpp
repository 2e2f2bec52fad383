#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "entropic/composer.hpp"
#include "entropic/gauss.hpp"
#include "entropic/mdp.hpp"
#include "entropic/soft_solver.hpp"

namespace entropic {

using Json = nlohmann::json;

std::string boundary_name(BoundaryMode m);
BoundaryMode parse_boundary(const std::string& name);

/// {width, height, boundary, gamma, features: [{col, row, dim, value}]}
Json task_to_json(const GridSpec& spec, double gamma);
/// Builds the diagonal grid world described by a task document. The
/// feature dimension is the optional "feature_dim" key or max(dim) + 1.
Task task_from_json(const Json& j, const std::string& name = "custom");

/// Built-in task name (see builtin_task_names) or path to a task JSON file.
/// A gamma override rebuilds the task with that discount.
Task resolve_task(const std::string& source, std::optional<double> gamma = std::nullopt);

Json table_to_json(const Table& t);
Table table_from_json(const Json& j);
Json policy_to_json(const Policy& p);
Policy policy_from_json(const Json& j);

Json solution_to_json(const SoftSolution& s);
SoftSolution solution_from_json(const Json& j);

Json composed_to_json(const ComposedPolicy& c);
ComposedPolicy composed_from_json(const Json& j);

Json mixture_to_json(const gauss::TruncatedNormalMixture& q);
gauss::TruncatedNormalMixture mixture_from_json(const Json& j);

std::string read_text_file(const std::string& path);
/// Writes `text` to `path`; throws std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& text);
Json read_json_file(const std::string& path);
/// Two-space indented dump with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace entropic
