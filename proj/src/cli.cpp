#include "entropic/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "entropic/composer.hpp"
#include "entropic/eval.hpp"
#include "entropic/gauss.hpp"
#include "entropic/render.hpp"
#include "entropic/serialize.hpp"

namespace entropic {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw UsageError("empty entry in list '" + text + "'");
    out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(const std::string& s, const std::string& flag) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
    throw UsageError(flag + ": '" + s + "' is not a number");
  return x;
}

std::vector<double> parse_reals(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& item : split_list(s)) out.push_back(parse_real(item, flag));
  return out;
}

std::uint64_t parse_seed(const std::string& s, const std::string& where) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError(where + ": '" + s + "' is not an unsigned 64-bit seed");
  return x;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

// Shared by solve and compose.
struct SolveFlags {
  std::string task;
  double alpha = 0.0;
  double gamma = 0.0;
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;

  void add(CLI::App* cmd) {
    cmd->add_option("--task", task, "built-in task (LR, LU, T, pointmass) or task JSON path")->required();
    alpha_opt = cmd->add_option("--alpha", alpha, "entropy temperature (default: the task's recommended alpha)");
    gamma_opt = cmd->add_option("--gamma", gamma, "discount override");
    cmd->add_option("--tolerance", tolerance, "sup-norm stopping tolerance")->capture_default_str();
    cmd->add_option("--max-iterations", max_iterations, "iteration cap per fixed point")->capture_default_str();
  }

  Task load() const {
    if (gamma_opt->count() && !(gamma >= 0.0 && gamma < 1.0)) throw UsageError("--gamma must lie in [0, 1)");
    try {
      return resolve_task(task, gamma_opt->count() ? std::optional<double>(gamma) : std::nullopt);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--task: ") + e.what());
    }
  }

  SolveConfig config(const Task& t) const {
    SolveConfig cfg;
    cfg.alpha = alpha_opt->count() ? alpha : t.recommended_alpha;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw UsageError("--alpha must be positive");
    if (!(cfg.tolerance > 0.0)) throw UsageError("--tolerance must be positive");
    if (cfg.max_iterations == 0) throw UsageError("--max-iterations must be positive");
    return cfg;
  }
};

int cmd_solve(const SolveFlags& f, const std::vector<double>& w_flag, std::size_t index, bool have_index,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Task task = f.load();
  const SolveConfig cfg = f.config(task);
  const std::size_t d = task.mdp.feature_dim();
  std::vector<double> w;
  if (!w_flag.empty()) {
    if (have_index) throw UsageError("give either --index or --w, not both");
    w = w_flag;
  } else {
    if (index >= d) throw UsageError("--index must be below the feature dimension " + std::to_string(d));
    const TaskWeights one_hot = TaskWeights::one_hot(d, index);
    w.assign(one_hot.values().begin(), one_hot.values().end());
  }
  std::optional<TaskWeights> weights;
  try {
    weights.emplace(w);
    if (weights->size() != d) throw std::invalid_argument("dimension " + std::to_string(d) + " expected");
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--w: ") + e.what());
  }
  const SoftSolution sol = soft_value_iteration(task.mdp, *weights, cfg);
  Json j = solution_to_json(sol);
  j["task"] = f.task;
  j["task_weights"] = w;
  emit(out_path, dump_json(j), out);
  if (!sol.converged) {
    err << "solve: no convergence after " << sol.iterations_used << " iterations (residual " << sol.residual
        << ")\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

struct ComposeFlags {
  std::string method;
  double b = 0.5;
  std::string w;
  std::size_t i = 0;
  std::size_t j = 1;
  std::string out;
  CLI::Option* b_opt = nullptr;
  CLI::Option* w_opt = nullptr;
};

int cmd_compose(const SolveFlags& f, const ComposeFlags& c, std::ostream& out) {
  Method method;
  try {
    method = parse_method(c.method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--method: ") + e.what());
  }
  if (c.b_opt->count() == c.w_opt->count()) throw UsageError("give exactly one of --b and --w");
  const Task task = f.load();
  const SolveConfig cfg = f.config(task);
  const TabularMdp& mdp = task.mdp;
  const std::size_t d = mdp.feature_dim();

  ComposedPolicy composed;
  std::vector<double> w;
  if (c.b_opt->count()) {
    if (!(c.b >= 0.0 && c.b <= 1.0)) throw UsageError("--b must lie in [0, 1]");
    if (c.i >= d || c.j >= d || c.i == c.j) throw UsageError("--i and --j must be distinct feature indices");
    TransferEvaluator ev(mdp, cfg, c.i, c.j, task.layout);
    composed = ev.compose(method, c.b);
    const TaskWeights tw = ev.weights(c.b);
    w.assign(tw.values().begin(), tw.values().end());
  } else {
    w = parse_reals(c.w, "--w");
    try {
      const TaskWeights tw(w);
      if (tw.size() != d) throw std::invalid_argument("dimension " + std::to_string(d) + " expected");
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--w: ") + e.what());
    }
    const TaskWeights tw(w);
    if (method == Method::dc_cheap || method == Method::dc_cheap_gpi)
      throw UsageError("--method " + method_name(method) + " is defined for two tasks; use --b");
    if (method == Method::condq) {
      composed = compose_condq(mdp, tw, cfg);
    } else {
      std::vector<Table> qs;
      std::vector<Policy> pis;
      std::vector<SuccessorFeatures> sfs;
      for (std::size_t k = 0; k < d; ++k) {
        SoftSolution sol = soft_value_iteration(mdp, TaskWeights::one_hot(d, k), cfg);
        require_converged(sol.converged, sol.residual, sol.iterations_used, "base solve " + std::to_string(k));
        if (method == Method::gpi) {
          SuccessorFeatures sf = compute_successor_features(mdp, sol.policy, cfg);
          require_converged(sf.converged, sf.residual, sf.iterations_used, "successor features");
          sfs.push_back(std::move(sf));
        }
        pis.push_back(sol.policy);
        qs.push_back(std::move(sol.q));
      }
      if (method == Method::co) {
        composed = compose_co(qs, tw, cfg.alpha);
      } else if (method == Method::gpi) {
        composed = compose_gpi(sfs, tw, cfg.alpha);
      } else {
        CorrectionTable corr = dc_n_fixed_point(mdp, pis, tw, cfg);
        require_converged(corr.converged, corr.residual, corr.iterations_used, "correction");
        composed = compose_dc(qs, corr, tw);
      }
    }
  }
  const SoftSolution value = evaluate_policy_maxent(mdp, composed.policy, TaskWeights(w), cfg);
  require_converged(value.converged, value.residual, value.iterations_used, "policy evaluation");
  double mean = 0.0;
  for (double v : value.v) mean += v;
  mean /= static_cast<double>(value.v.size());

  Json j = composed_to_json(composed);
  j["task"] = f.task;
  j["task_weights"] = w;
  j["value_per_state"] = value.v;
  j["value_mean"] = mean;
  emit(c.out, dump_json(j), out);
  if (!c.out.empty() && c.out != "-") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", mean);
    out << method_tag(composed.method) << " mean value " << buf << "\n";
  }
  return kExitOk;
}

struct SweepFlags {
  std::string tasks = "LR,LU,T";
  std::string methods = "co,gpi,dc,dc-cheap,dc-cheap-gpi,condq";
  std::string b_grid;
  double alpha = 0.0;
  CLI::Option* alpha_opt = nullptr;
  std::string start = "uniform";
  std::string start_states;
  std::size_t i = 0;
  std::size_t j = 1;
  std::size_t jobs = 1;
  bool timing = false;
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
  std::string out;
  std::string json_out;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  SweepSpec spec;
  spec.tasks = split_list(f.tasks);
  for (const std::string& m : split_list(f.methods)) {
    try {
      spec.methods.push_back(parse_method(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--methods: ") + e.what());
    }
  }
  if (spec.tasks.empty()) throw UsageError("--tasks: no task given");
  if (spec.methods.empty()) throw UsageError("--methods: no method given");
  spec.b_grid = f.b_grid.empty() ? default_b_grid() : parse_reals(f.b_grid, "--b-grid");
  if (spec.b_grid.empty()) throw UsageError("--b-grid: empty grid");
  for (double b : spec.b_grid)
    if (!(b >= 0.0 && b <= 1.0)) throw UsageError("--b-grid: every b must lie in [0, 1]");
  if (f.alpha_opt->count()) {
    if (!(f.alpha > 0.0)) throw UsageError("--alpha must be positive");
    spec.alpha = f.alpha;
  }
  spec.cfg.tolerance = f.tolerance;
  spec.cfg.max_iterations = f.max_iterations;
  if (!(f.tolerance > 0.0)) throw UsageError("--tolerance must be positive");
  if (f.max_iterations == 0) throw UsageError("--max-iterations must be positive");
  try {
    spec.start.mode = parse_start_mode(f.start);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--start: ") + e.what());
  }
  if (spec.start.mode == StartMode::explicit_list) {
    for (const std::string& s : split_list(f.start_states)) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("--start-states: bad state '" + s + "'");
      spec.start.states.push_back(v);
    }
    if (spec.start.states.empty()) throw UsageError("--start explicit needs --start-states");
  }
  if (f.jobs == 0) throw UsageError("--jobs must be at least 1");
  spec.feature_i = f.i;
  spec.feature_j = f.j;
  spec.jobs = f.jobs;
  spec.record_wall_time = f.timing;
  spec.output_path = f.out;
  for (const std::string& t : spec.tasks) {
    try {
      resolve_task(t);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--tasks: ") + e.what());
    }
  }
  std::vector<ResultRow> rows;
  try {
    rows = sweep(spec);
  } catch (const ConvergenceError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  emit(f.out, format_csv(rows), out);
  if (!f.json_out.empty()) write_text_file(f.json_out, format_rows_json(rows));
  return kExitOk;
}

struct RenderFlags {
  std::string what = "policy";
  std::string input;
  std::string input_j;
  std::string task;
  double b = 0.5;
  std::string format = "svg";
  std::string title;
  std::string out;
};

// Policy plus per-state values from a solve or compose document.
std::pair<Policy, std::vector<double>> load_policy_doc(const Json& j) {
  Policy pi = policy_from_json(j.at("policy"));
  std::vector<double> v;
  if (j.contains("v")) {
    v = j.at("v").get<std::vector<double>>();
  } else if (j.contains("value_per_state")) {
    v = j.at("value_per_state").get<std::vector<double>>();
  } else {
    const Table q = table_from_json(j.at("q"));
    const double alpha = j.at("alpha").get<double>();
    std::vector<double> scaled(q.cols());
    for (std::size_t s = 0; s < q.rows(); ++s) {
      for (std::size_t a = 0; a < q.cols(); ++a) scaled[a] = q(s, a) / alpha;
      v.push_back(alpha * log_sum_exp(scaled));
    }
  }
  return {std::move(pi), std::move(v)};
}

int cmd_render(const RenderFlags& f, std::ostream& out) {
  if (f.what != "policy" && f.what != "value" && f.what != "divergence")
    throw UsageError("--what must be policy, value or divergence");
  if (f.format != "svg" && f.format != "pgm") throw UsageError("--format must be svg or pgm");
  if (f.format == "pgm" && f.what == "policy") throw UsageError("--format pgm draws values only (use --what value)");
  Json doc;
  try {
    doc = read_json_file(f.input);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--input: ") + e.what());
  }
  std::string task_name = f.task;
  if (task_name.empty() && doc.contains("task")) task_name = doc.at("task").get<std::string>();
  if (task_name.empty()) throw UsageError("--task is required when the input does not name its task");
  Task task = [&] {
    try {
      return resolve_task(task_name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--task: ") + e.what());
    }
  }();

  std::pair<Policy, std::vector<double>> first;
  try {
    first = load_policy_doc(doc);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--input: ") + e.what());
  }
  RenderOptions opts;
  opts.title = f.title;
  std::vector<double> values = first.second;
  std::optional<Policy> arrows;
  if (f.what == "policy") arrows = first.first;
  if (f.what == "divergence") {
    if (f.input_j.empty()) throw UsageError("--what divergence needs --input-j");
    if (!(f.b >= 0.0 && f.b <= 1.0)) throw UsageError("--b must lie in [0, 1]");
    std::pair<Policy, std::vector<double>> second;
    try {
      second = load_policy_doc(read_json_file(f.input_j));
    } catch (const std::exception& e) {
      throw UsageError(std::string("--input-j: ") + e.what());
    }
    values = divergence_map(first.first, second.first, f.b);
  }
  if (values.size() != task.mdp.num_states()) throw UsageError("input does not match the task's state count");
  const std::string text = f.format == "pgm" ? render_pgm(task.layout, values)
                                             : render_grid_svg(task.layout, values, arrows, opts);
  emit(f.out, text, out);
  return kExitOk;
}

}  // namespace

std::vector<CheckLine> gauss_check_battery(std::size_t sample_count, std::uint64_t seed) {
  using namespace gauss;
  std::vector<CheckLine> lines;
  auto add = [&](std::string name, double value, double tol, bool pass) {
    lines.push_back({std::move(name), value, tol, pass});
  };

  // exp(Q) = exp(-a^2) on [-1, 1]: Z = sqrt(pi) erf(1).
  {
    const QuadraticQ q{{0.0}, {1.0 / std::numbers::sqrt2}, 0.0};
    const double truth = std::log(std::sqrt(std::numbers::pi) * std::erf(1.0));
    const auto proposal = TruncatedNormalMixture::single({0.0}, {1.0});
    std::vector<double> errors;
    for (std::uint64_t k = 0; k < 20; ++k)
      errors.push_back(std::abs(snis_log_partition(q, proposal, 1.0, {sample_count, derive_seed(seed, k)}) - truth));
    std::sort(errors.begin(), errors.end());
    const double median = 0.5 * (errors[9] + errors[10]);
    add("log-partition median |error|", median, 0.01, median <= 0.01);
  }
  // Q = 0 in two dimensions: log Z = 2 ln 2.
  {
    const auto proposal = TruncatedNormalMixture::single({0.0, 0.0}, {0.6, 0.6});
    const double est = snis_log_partition([](std::span<const double>) { return 0.0; }, proposal, 1.0,
                                          {sample_count, derive_seed(seed, 100)});
    const double err = std::abs(est - 2.0 * std::numbers::ln2);
    add("log-volume |error|", err, 0.01, err <= 0.01);
  }
  // Closed-form Renyi divergence against quadrature.
  {
    double worst = 0.0;
    for (int k = 1; k <= 9; ++k) {
      const double b = k / 10.0;
      const double integral = integrate_simpson(
          [&](double x) { return std::pow(normal_pdf(x, 0.0, 1.0), b) * std::pow(normal_pdf(x, 1.0, 1.0), 1.0 - b); },
          -20.0, 21.0, 20000);
      worst = std::max(worst, std::abs(gaussian_renyi(0.0, 1.0, 1.0, b) - std::log(integral) / (b - 1.0)));
    }
    add("renyi vs quadrature", worst, 1e-6, worst <= 1e-6);
  }
  {
    double worst = 0.0;
    const double half = gaussian_gb(0.0, 1.0, 1.0, 0.5);
    for (int k = 1; k <= 9; ++k) {
      const double b = k / 10.0;
      const double gb = gaussian_gb(0.0, 1.0, 1.0, b);
      worst = std::max(worst, std::abs(gb - 4.0 * b * (1.0 - b) * half) / gb);
    }
    add("G_b = 4b(1-b) G_1/2 (rel)", worst, 1e-12, worst <= 1e-12);
  }
  {
    // sigma1 = 0.5, sigma2 = 2: the equal-variance identity must break.
    auto g = [](double b) {
      return -std::log(integrate_simpson(
          [&](double x) { return std::pow(normal_pdf(x, 0.0, 0.5), b) * std::pow(normal_pdf(x, 1.0, 2.0), 1.0 - b); },
          -30.0, 31.0, 40000));
    };
    const double half = g(0.5);
    double worst = 0.0;
    for (int k = 1; k <= 9; ++k) {
      const double b = k / 10.0;
      worst = std::max(worst, std::abs(g(b) - 4.0 * b * (1.0 - b) * half));
    }
    add("unequal-variance violation", worst, 1e-3, worst > 1e-3);
  }
  {
    const auto prod = mixture_power_product(TruncatedNormalMixture::single({0.0}, {1.0}),
                                            TruncatedNormalMixture::single({1.0}, {1.0}), 0.5);
    const double dev = std::abs(prod.means[0][0] - 0.5) + std::abs(prod.scales[0][0] - 1.0);
    add("product N(0,1)xN(1,1) moments", dev, 1e-12, dev <= 1e-12 && prod.num_gaussians() == 1);
  }
  {
    const auto qi = TruncatedNormalMixture::single({-0.3, 0.2}, {0.4, 0.7});
    const auto qj = TruncatedNormalMixture::single({0.5, -0.1}, {0.9, 0.3});
    const double b = 0.3;
    const auto prod = mixture_power_product(qi, qj, b);
    auto gap = [&](double x, double y) {
      const double a[2] = {x, y};
      return mixture_log_density_untruncated(prod, a) - b * mixture_log_density_untruncated(qi, a) -
             (1.0 - b) * mixture_log_density_untruncated(qj, a);
    };
    const double c = gap(0.0, 0.0);
    double worst = 0.0;
    for (int u = -10; u <= 10; ++u)
      for (int v = -10; v <= 10; ++v) worst = std::max(worst, std::abs(gap(u / 10.0, v / 10.0) - c));
    add("product log-density identity", worst, 1e-9, worst <= 1e-9);
  }
  {
    const QuadraticQ q{{0.3}, {0.2}, 0.0};
    TruncatedNormalMixture init;
    init.dim = 1;
    init.weights = {0.25, 0.25, 0.25, 0.25};
    init.means = {{-0.75}, {-0.25}, {0.25}, {0.75}};
    init.scales = {{0.3}, {0.3}, {0.3}, {0.3}};
    const auto fit = fit_proposal(q, init, 1.0, {sample_count, derive_seed(seed, 200)}, 20);
    double mean = 0.0;
    for (std::size_t m = 0; m < fit.num_gaussians(); ++m) mean += fit.weights[m] * fit.means[m][0];
    const double err = std::abs(mean - q.boltzmann_mean(1.0)[0]);
    add("EM fitted mean |error|", err, 0.02, err <= 0.02);
  }
  return lines;
}

std::string format_check_table(const std::vector<CheckLine>& lines) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-34s %-14s %-14s %s\n", "check", "value", "tolerance", "result");
  out += buf;
  std::size_t passed = 0;
  for (const CheckLine& l : lines) {
    std::snprintf(buf, sizeof buf, "%-34s %-14.6e %-14.6e %s\n", l.name.c_str(), l.value, l.tolerance,
                  l.pass ? "PASS" : "FAIL");
    out += buf;
    passed += l.pass ? 1 : 0;
  }
  std::snprintf(buf, sizeof buf, "%zu/%zu checks passed\n", passed, lines.size());
  out += buf;
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Max-ent policy composition on tabular MDPs, plus the Gaussian estimator toolkit",
               "entropic-compose"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "entropic-compose 1.0.0");

  SolveFlags solve_flags;
  std::size_t index = 0;
  std::string solve_w;
  std::string solve_out;
  auto* solve = app.add_subcommand("solve", "soft value iteration on one task weighting, written as JSON");
  solve_flags.add(solve);
  auto* index_opt = solve->add_option("--index", index, "one-hot feature index to solve")->capture_default_str();
  solve->add_option("--w", solve_w, "explicit task weights, comma separated (instead of --index)");
  solve->add_option("--out", solve_out, "output path (default: stdout)");

  SolveFlags compose_flags;
  ComposeFlags cf;
  auto* compose = app.add_subcommand("compose", "compose base policies for a new task weighting");
  compose_flags.add(compose);
  compose->add_option("--method", cf.method, "co, gpi, dc, dc-cheap, dc-cheap-gpi or condq")->required();
  cf.b_opt = compose->add_option("--b", cf.b, "weight b on feature i (1 - b on feature j)");
  cf.w_opt = compose->add_option("--w", cf.w, "full task weights, comma separated");
  compose->add_option("--i", cf.i, "first feature index")->capture_default_str();
  compose->add_option("--j", cf.j, "second feature index")->capture_default_str();
  compose->add_option("--out", cf.out, "output path (default: stdout)");

  SweepFlags sf;
  auto* sweep_cmd = app.add_subcommand("sweep", "regret of each method over tasks and a b grid, as CSV");
  sweep_cmd->add_option("--tasks", sf.tasks, "comma separated tasks")->capture_default_str();
  sweep_cmd->add_option("--methods", sf.methods, "comma separated methods")->capture_default_str();
  sweep_cmd->add_option("--b-grid", sf.b_grid, "comma separated b values (default: 0,0.1,...,1)");
  sf.alpha_opt = sweep_cmd->add_option("--alpha", sf.alpha, "temperature (default: each task's recommended alpha)");
  sweep_cmd->add_option("--start", sf.start, "start distribution: uniform, center or explicit")->capture_default_str();
  sweep_cmd->add_option("--start-states", sf.start_states, "state list for --start explicit");
  sweep_cmd->add_option("--i", sf.i, "first feature index")->capture_default_str();
  sweep_cmd->add_option("--j", sf.j, "second feature index")->capture_default_str();
  sweep_cmd->add_option("--jobs", sf.jobs, "worker threads (output is independent of this)")->capture_default_str();
  sweep_cmd->add_flag("--timing", sf.timing, "record per-row wall time (makes the CSV non-reproducible)");
  sweep_cmd->add_option("--tolerance", sf.tolerance, "sup-norm stopping tolerance")->capture_default_str();
  sweep_cmd->add_option("--max-iterations", sf.max_iterations, "iteration cap per fixed point")->capture_default_str();
  sweep_cmd->add_option("--out", sf.out, "CSV output path (default: stdout)");
  sweep_cmd->add_option("--json-out", sf.json_out, "optional JSON mirror of the rows");

  RenderFlags rf;
  auto* render = app.add_subcommand("render", "SVG (or PGM) picture of a solution, policy or divergence map");
  render->add_option("--what", rf.what, "policy, value or divergence")->capture_default_str();
  render->add_option("--input", rf.input, "solve or compose JSON")->required();
  render->add_option("--input-j", rf.input_j, "second policy JSON for --what divergence");
  render->add_option("--task", rf.task, "task for the grid layout (default: the input's task)");
  render->add_option("--b", rf.b, "divergence order b")->capture_default_str();
  render->add_option("--format", rf.format, "svg or pgm")->capture_default_str();
  render->add_option("--title", rf.title, "caption drawn above the grid");
  render->add_option("--out", rf.out, "output path (default: stdout)");

  std::size_t gauss_n = 100000;
  std::string gauss_seed;
  auto* gauss_cmd = app.add_subcommand("gauss-check", "run the Gaussian estimator battery and print a table");
  gauss_cmd->add_option("--n", gauss_n, "samples per estimate")->capture_default_str();
  auto* seed_opt = gauss_cmd->add_option("--seed", gauss_seed, "RNG seed (fallback: ENTROPIC_COMPOSE_SEED, then 0)");

  std::vector<std::string> argv_store;
  argv_store.push_back("entropic-compose");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) {
      const std::vector<double> w = solve_w.empty() ? std::vector<double>{} : parse_reals(solve_w, "--w");
      return cmd_solve(solve_flags, w, index, index_opt->count() > 0, solve_out, out, err);
    }
    if (*compose) return cmd_compose(compose_flags, cf, out);
    if (*sweep_cmd) return cmd_sweep(sf, out);
    if (*render) return cmd_render(rf, out);
    if (*gauss_cmd) {
      std::uint64_t seed = 0;
      if (seed_opt->count()) {
        seed = parse_seed(gauss_seed, "--seed");
      } else if (const char* env = std::getenv("ENTROPIC_COMPOSE_SEED")) {
        seed = parse_seed(env, "ENTROPIC_COMPOSE_SEED");
      }
      if (gauss_n == 0) throw UsageError("--n must be at least 1");
      const auto lines = gauss_check_battery(gauss_n, seed);
      char head[96];
      std::snprintf(head, sizeof head, "gauss-check n=%zu seed=%llu\n", gauss_n,
                    static_cast<unsigned long long>(seed));
      out << head << format_check_table(lines);
      const bool all = std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.pass; });
      return all ? kExitOk : kExitUsage;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace entropic
