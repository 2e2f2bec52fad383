#include "entropic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "entropic/serialize.hpp"

namespace entropic {

namespace {

std::string format_b(double b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", b);
  return buf;
}

std::string context_of(const std::string& task, Method m, double b) {
  return (task.empty() ? std::string() : "task " + task + ", ") + "method " + method_name(m) + ", b=" + format_b(b);
}

double mean_over(const std::vector<double>& v, const std::vector<std::size_t>& states) {
  double s = 0.0;
  for (std::size_t k : states) s += v[k];
  return s / static_cast<double>(states.size());
}

double parse_double(const std::string& field) {
  double x = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, x);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("bad number '" + field + "' in CSV");
  return x;
}

}  // namespace

std::string start_mode_name(StartMode m) {
  switch (m) {
    case StartMode::uniform: return "uniform";
    case StartMode::center: return "center";
    case StartMode::explicit_list: return "explicit";
  }
  return "uniform";
}

StartMode parse_start_mode(const std::string& name) {
  if (name == "uniform") return StartMode::uniform;
  if (name == "center") return StartMode::center;
  if (name == "explicit") return StartMode::explicit_list;
  throw std::invalid_argument("unknown start mode '" + name + "' (expected uniform, center or explicit)");
}

std::vector<std::size_t> start_states(const StartSpec& start, std::size_t num_states,
                                      const std::optional<GridLayout>& layout) {
  switch (start.mode) {
    case StartMode::uniform: {
      std::vector<std::size_t> all(num_states);
      for (std::size_t s = 0; s < num_states; ++s) all[s] = s;
      return all;
    }
    case StartMode::center:
      if (!layout) throw std::invalid_argument("center start mode needs a grid layout");
      return {layout->center_state()};
    case StartMode::explicit_list:
      if (start.states.empty()) throw std::invalid_argument("explicit start list is empty");
      for (std::size_t s : start.states)
        if (s >= num_states) throw std::invalid_argument("start state out of range");
      return start.states;
  }
  return {};
}

TransferEvaluator::TransferEvaluator(TabularMdp mdp, SolveConfig cfg, std::size_t feature_i, std::size_t feature_j,
                                     std::optional<GridLayout> layout)
    : mdp_(std::move(mdp)), cfg_(cfg), i_(feature_i), j_(feature_j), layout_(std::move(layout)) {
  cfg_.check();
  if (i_ >= mdp_.feature_dim() || j_ >= mdp_.feature_dim())
    throw std::invalid_argument("transfer feature index out of range");
  if (i_ == j_) throw std::invalid_argument("transfer needs two distinct features");
}

TaskWeights TransferEvaluator::weights(double b) const { return TaskWeights::pair(mdp_.feature_dim(), i_, j_, b); }

void TransferEvaluator::ensure_bases() const {
  std::call_once(bases_once_, [this] {
    bases_.clear();
    sfs_.clear();
    for (std::size_t f : {i_, j_}) {
      SoftSolution sol = soft_value_iteration(mdp_, TaskWeights::one_hot(mdp_.feature_dim(), f), cfg_);
      require_converged(sol.converged, sol.residual, sol.iterations_used, "base solve " + std::to_string(f));
      SuccessorFeatures sf = compute_successor_features(mdp_, sol.policy, cfg_);
      require_converged(sf.converged, sf.residual, sf.iterations_used, "successor features " + std::to_string(f));
      bases_.push_back(std::move(sol));
      sfs_.push_back(std::move(sf));
    }
  });
  if (bases_.size() != 2) throw std::runtime_error("base solutions unavailable after a failed solve");
}

const SoftSolution& TransferEvaluator::base(std::size_t k) const {
  ensure_bases();
  return bases_.at(k);
}

const SuccessorFeatures& TransferEvaluator::successor_features(std::size_t k) const {
  ensure_bases();
  return sfs_.at(k);
}

const CorrectionTable& TransferEvaluator::correction_half() const {
  ensure_bases();
  std::call_once(half_once_, [this] {
    CorrectionTable c = dc_fixed_point(mdp_, bases_[0].policy, bases_[1].policy, 0.5, cfg_);
    require_converged(c.converged, c.residual, c.iterations_used, "correction at b=1/2");
    c_half_ = std::move(c);
  });
  return c_half_;
}

std::shared_ptr<const SoftSolution> TransferEvaluator::oracle(double b) const {
  {
    std::lock_guard lock(oracle_mutex_);
    auto it = oracles_.find(b);
    if (it != oracles_.end()) return it->second;
  }
  auto sol = std::make_shared<SoftSolution>(soft_value_iteration(mdp_, weights(b), cfg_));
  require_converged(sol->converged, sol->residual, sol->iterations_used, "oracle solve at b=" + format_b(b));
  std::lock_guard lock(oracle_mutex_);
  return oracles_.emplace(b, std::move(sol)).first->second;
}

ComposedPolicy TransferEvaluator::compose(Method method, double b) const {
  const TaskWeights w = weights(b);
  const double alpha = cfg_.alpha;
  switch (method) {
    case Method::co:
      return compose_co(base(0).q, base(1).q, b, alpha);
    case Method::gpi:
      return compose_gpi({successor_features(0), successor_features(1)}, w, alpha);
    case Method::dc: {
      CorrectionTable c = dc_fixed_point(mdp_, base(0).policy, base(1).policy, b, cfg_);
      require_converged(c.converged, c.residual, c.iterations_used, "correction");
      return compose_dc(base(0).q, base(1).q, c, b);
    }
    case Method::dc_cheap:
      return compose_dc(base(0).q, base(1).q, dc_cheap(correction_half(), b), b);
    case Method::dc_cheap_gpi: {
      const CorrectionTable cheap = dc_cheap(correction_half(), b);
      return dc_cheap_gpi(compose_co(base(0).q, base(1).q, b, alpha), cheap, compose(Method::gpi, b));
    }
    case Method::condq:
      return compose_condq(mdp_, w, cfg_);
  }
  throw std::invalid_argument("unknown method");
}

std::vector<double> TransferEvaluator::evaluate(const Policy& policy, double b) const {
  SoftSolution ev = evaluate_policy_maxent(mdp_, policy, weights(b), cfg_);
  require_converged(ev.converged, ev.residual, ev.iterations_used, "policy evaluation");
  return ev.v;
}

ResultRow TransferEvaluator::regret(Method method, double b, const StartSpec& start,
                                    const std::string& task_name) const {
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("b must lie in [0, 1]");
  const auto states = start_states(start, mdp_.num_states(), layout_);
  try {
    const ComposedPolicy composed = compose(method, b);
    const std::vector<double> v_method = evaluate(composed.policy, b);
    const auto opt = oracle(b);
    ResultRow row;
    row.task = task_name;
    row.method = method;
    row.b = b;
    row.value_optimal = mean_over(opt->v, states);
    row.value_method = mean_over(v_method, states);
    row.regret = row.value_optimal - row.value_method;
    row.solver_iterations = composed.iterations_used;
    return row;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(context_of(task_name, method, b) + ": " + e.what(), e.residual(), e.iterations());
  }
}

ResultRow regret(const TabularMdp& mdp, Method method, double b, const SolveConfig& cfg, const StartSpec& start,
                 const std::optional<GridLayout>& layout) {
  return TransferEvaluator(mdp, cfg, 0, 1, layout).regret(method, b, start);
}

void SweepSpec::check() const {
  if (tasks.empty()) throw std::invalid_argument("sweep needs at least one task");
  if (methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  if (b_grid.empty()) throw std::invalid_argument("sweep needs a nonempty b grid");
  for (double b : b_grid)
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("every b in the grid must lie in [0, 1]");
  if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (jobs == 0) throw std::invalid_argument("jobs must be at least 1");
}

std::vector<double> default_b_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

std::vector<ResultRow> sweep(const SweepSpec& spec) {
  spec.check();
  std::vector<double> grid = spec.b_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<std::unique_ptr<TransferEvaluator>> evaluators;
  std::vector<std::string> names;
  for (const std::string& source : spec.tasks) {
    Task task = resolve_task(source);
    SolveConfig cfg = spec.cfg;
    cfg.alpha = spec.alpha.value_or(task.recommended_alpha);
    evaluators.push_back(std::make_unique<TransferEvaluator>(std::move(task.mdp), cfg, spec.feature_i,
                                                             spec.feature_j, task.layout));
    names.push_back(task.name);
  }

  struct Item {
    std::size_t task;
    Method method;
    double b;
  };
  std::vector<Item> items;
  for (std::size_t t = 0; t < evaluators.size(); ++t)
    for (Method m : spec.methods)
      for (double b : grid) items.push_back({t, m, b});

  std::vector<ResultRow> rows(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  auto run = [&](std::size_t k) {
    const Item& it = items[k];
    try {
      const auto t0 = std::chrono::steady_clock::now();
      rows[k] = evaluators[it.task]->regret(it.method, it.b, spec.start, names[it.task]);
      if (spec.record_wall_time)
        rows[k].wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  const std::size_t jobs = std::min(spec.jobs, std::max<std::size_t>(items.size(), 1));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < items.size(); ++k) run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < items.size(); k = next++) run(k);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<double> divergence_map(const Policy& pi_i, const Policy& pi_j, double b) {
  if (!pi_i.prob.same_shape(pi_j.prob)) throw std::invalid_argument("divergence_map: policy shapes differ");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("divergence_map: b must lie in [0, 1]");
  check_stochastic(pi_i);
  check_stochastic(pi_j);
  std::vector<double> out(pi_i.num_states(), 0.0);
  if (b == 1.0) return out;
  for (std::size_t s = 0; s < out.size(); ++s)
    out[s] = (1.0 - b) * renyi_divergence(pi_i.log_prob.row(s), pi_j.log_prob.row(s), b);
  return out;
}

double log_regret(double regret) { return std::log10(std::max(regret, 1e-12)); }

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[512];
  for (const ResultRow& r : rows) {
    if (r.task.find_first_of(",\n\"") != std::string::npos)
      throw std::invalid_argument("task name '" + r.task + "' cannot be written to CSV");
    std::snprintf(buf, sizeof buf, ",%s,%.17g,%.17g,%.17g,%.17g,%zu,%.17g\n", method_name(r.method).c_str(), r.b,
                  r.regret, r.value_optimal, r.value_method, r.solver_iterations, r.wall_time_ms);
    out += r.task;
    out += buf;
  }
  return out;
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  write_text_file(path, format_csv(rows));
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("CSV header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 8) throw std::invalid_argument("CSV row has " + std::to_string(f.size()) + " fields, expected 8");
    ResultRow r;
    r.task = f[0];
    r.method = parse_method(f[1]);
    r.b = parse_double(f[2]);
    r.regret = parse_double(f[3]);
    r.value_optimal = parse_double(f[4]);
    r.value_method = parse_double(f[5]);
    r.solver_iterations = static_cast<std::size_t>(std::stoull(f[6]));
    r.wall_time_ms = parse_double(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

std::string format_rows_json(const std::vector<ResultRow>& rows) {
  Json out = Json::array();
  for (const ResultRow& r : rows)
    out.push_back({{"task", r.task},
                   {"method", method_name(r.method)},
                   {"b", r.b},
                   {"regret", r.regret},
                   {"value_optimal", r.value_optimal},
                   {"value_method", r.value_method},
                   {"solver_iterations", r.solver_iterations},
                   {"wall_time_ms", r.wall_time_ms}});
  return dump_json(out);
}

}  // namespace entropic
