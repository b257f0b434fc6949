#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradsolve/bench.hpp"
#include "gradsolve/error.hpp"
#include "gradsolve/parallel_sim.hpp"
#include "gradsolve/problems.hpp"
#include "gradsolve/solver.hpp"

namespace gradsolve::cli {

namespace {

struct ProblemOptions {
  std::string gen;
  std::string matrix;
  std::string rhs = "ones";
};

void add_problem_options(CLI::App* app, ProblemOptions& opts) {
  auto* gen = app->add_option("--gen", opts.gen,
                              "Generated problem, e.g. diag:n=100,loguniform,kmax=1e2,seed=1");
  auto* matrix = app->add_option("--matrix", opts.matrix, "Matrix Market file");
  gen->excludes(matrix);
  app->add_option("--rhs", opts.rhs, "Right-hand side for --matrix: zero|ones|random:SEED|file:PATH")
      ->capture_default_str();
}

RhsPolicy parse_rhs(const std::string& text) {
  RhsPolicy policy;
  if (text == "zero") {
    policy.kind = RhsPolicy::Kind::Zero;
  } else if (text == "ones") {
    policy.kind = RhsPolicy::Kind::Ones;
  } else if (text.rfind("random:", 0) == 0) {
    policy.kind = RhsPolicy::Kind::Random;
    try {
      policy.seed = std::stoull(text.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("invalid rhs seed in '" + text + "'");
    }
  } else if (text.rfind("file:", 0) == 0) {
    policy.kind = RhsPolicy::Kind::FromFile;
    policy.path = text.substr(5);
  } else {
    throw ConfigError("unknown rhs policy '" + text + "'");
  }
  return policy;
}

ProblemInstance load_problem(const ProblemOptions& opts) {
  if (!opts.gen.empty()) return resolve_problem(ProblemRef::parse(opts.gen), parse_rhs(opts.rhs));
  if (!opts.matrix.empty()) return load_matrix_market(opts.matrix, parse_rhs(opts.rhs));
  throw ConfigError("one of --gen or --matrix is required");
}

const std::map<std::string, StopNorm> kStopNorms{{"g0", StopNorm::InitialGradient},
                                                 {"b", StopNorm::RightHandSide}};
const std::map<std::string, GradientUpdate> kUpdates{{"recompute", GradientUpdate::Recompute},
                                                     {"recurrence", GradientUpdate::Recurrence}};

struct RunOptions {
  std::string rule = "cy:l=4,m=3";
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  StopNorm stop_norm = StopNorm::InitialGradient;
  GradientUpdate update = GradientUpdate::Recompute;
  std::string history_csv;
  std::string history_json;
};

void add_run_options(CLI::App* app, RunOptions& opts) {
  app->add_option("--rule", opts.rule, "Steplength rule, e.g. cy:l=4,m=3, or cg")->capture_default_str();
  app->add_option("--tol", opts.tol, "Relative residual threshold")->capture_default_str();
  app->add_option("--max-iter", opts.max_iter, "Iteration cap")->capture_default_str();
  app->add_option("--stop-norm", opts.stop_norm, "Tolerance reference: g0 or b")
      ->transform(CLI::CheckedTransformer(kStopNorms, CLI::ignore_case));
  app->add_option("--update", opts.update, "Gradient update: recompute or recurrence")
      ->transform(CLI::CheckedTransformer(kUpdates, CLI::ignore_case));
  app->add_option("--history-csv", opts.history_csv, "Write the convergence history as CSV");
  app->add_option("--history-json", opts.history_json, "Write the convergence history as JSON");
}

SolveConfig make_config(const RunOptions& opts, bool is_cg) {
  SolveConfig config;
  if (!is_cg) config.rule = SteplengthRule::parse(opts.rule);
  config.tol = opts.tol;
  config.max_iter = opts.max_iter;
  config.stop_norm = opts.stop_norm;
  config.update = opts.update;
  config.validate();
  return config;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream file(path);
  if (!file) throw FormatError("cannot open '" + path + "' for writing");
  file << contents;
  if (!file) throw FormatError("failed writing '" + path + "'");
}

template <typename Writer>
void write_file_with(const std::string& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_file(path, buf.str());
}

void write_history_outputs(const RunOptions& opts, const ConvergenceHistory& history,
                           const SolveConfig& config, const std::string& label) {
  if (!opts.history_csv.empty()) {
    write_file_with(opts.history_csv, [&](std::ostream& o) { write_history_csv(o, history); });
  }
  if (!opts.history_json.empty()) {
    write_file(opts.history_json, history_to_json(history, config, label) + "\n");
  }
}

int exit_code_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return kExitConverged;
    case SolveStatus::MaxIterReached: return kExitMaxIter;
    case SolveStatus::NumericalBreakdown: return kExitBreakdown;
  }
  return kExitBreakdown;
}

void print_warnings(const ProblemInstance& problem, std::ostream& err) {
  for (const auto& w : problem.warnings) err << "warning: " << w << '\n';
}

int cmd_solve(const ProblemOptions& popts, const RunOptions& ropts, std::ostream& out,
              std::ostream& err) {
  const bool is_cg = ropts.rule == "cg";
  const SolveConfig config = make_config(ropts, is_cg);
  const ProblemInstance problem = load_problem(popts);
  print_warnings(problem, err);
  const ConvergenceHistory history =
      is_cg ? solve_cg(problem, config) : solve_gradient(problem, config);
  write_history_outputs(ropts, history, config, problem.label);
  out << "problem=" << problem.label << " method=" << history.method
      << " status=" << to_string(history.status) << " iterations=" << history.iterations
      << " final_grad_norm=" << history.final_grad_norm << '\n';
  if (!history.breakdown_reason.empty()) err << "breakdown: " << history.breakdown_reason << '\n';
  return exit_code_for(history.status);
}

struct BenchOptions {
  std::vector<std::string> problems;
  std::vector<std::string> methods;
  std::vector<double> thresholds;
  std::size_t repetitions = 1;
  std::size_t max_iter = 10000;
  BenchFormat format = BenchFormat::Markdown;
  StopNorm stop_norm = StopNorm::InitialGradient;
  std::string rhs = "ones";
  std::string output;
};

// Stand-in for the large-scale benchmark matrix.
constexpr const char* kDefaultBenchProblem = "diag:n=50000,loguniform,kmax=1e4,seed=1,rhs=ones";

int cmd_bench(const BenchOptions& opts, std::ostream& out) {
  BenchSpec spec = BenchSpec::defaults();
  spec.problems = opts.problems.empty() ? std::vector<std::string>{kDefaultBenchProblem} : opts.problems;
  if (!opts.methods.empty()) spec.methods = opts.methods;
  if (!opts.thresholds.empty()) spec.thresholds = opts.thresholds;
  spec.repetitions = opts.repetitions;
  spec.max_iter = opts.max_iter;
  spec.format = opts.format;
  spec.stop_norm = opts.stop_norm;
  spec.rhs_policy = parse_rhs(opts.rhs);
  const std::string text = render(run_bench(spec), spec.format);
  if (opts.output.empty()) {
    out << text;
  } else {
    write_file(opts.output, text);
  }
  return kExitConverged;
}

struct SimulateOptions {
  std::size_t processors = 4;
  std::string strategy = "ga";
  ReduceOrder order = ReduceOrder::Ascending;
  std::string trace_csv;
};

int cmd_simulate(const ProblemOptions& popts, const RunOptions& ropts, const SimulateOptions& sopts,
                 std::ostream& out, std::ostream& err) {
  if (ropts.rule == "cg") throw ConfigError("simulate needs a steplength rule, not cg");
  const SolveConfig config = make_config(ropts, false);
  const ProblemInstance problem = load_problem(popts);
  print_warnings(problem, err);
  const PartitionPlan plan = partition_rows(problem.op.dimension(), sopts.processors);
  const Strategy strategy = sopts.strategy == "ra" ? Strategy::RA : Strategy::GA;
  const SimulationResult result =
      simulate_parallel_solve(problem, config.rule, plan, strategy, config, sopts.order);
  write_history_outputs(ropts, result.history, config, problem.label);
  if (!sopts.trace_csv.empty()) {
    write_file_with(sopts.trace_csv, [&](std::ostream& o) { write_comm_trace_csv(o, result.trace); });
  }
  out << "problem=" << problem.label << " method=" << result.history.method
      << " strategy=" << to_string(strategy) << " p=" << plan.processors()
      << " status=" << to_string(result.history.status)
      << " iterations=" << result.history.iterations
      << " steplength_scalars=" << result.trace.total_scalars()
      << " gather_scalars=" << result.trace.total_gather()
      << " max_divergence=" << result.trace.max_divergence() << '\n';
  return exit_code_for(result.history.status);
}

int cmd_generate(const std::string& spec, const std::string& prefix, std::ostream& out) {
  const ProblemRef ref = ProblemRef::parse(spec);
  if (ref.kind == ProblemRef::Kind::MatrixMarket) {
    throw ConfigError("generate expects a generator spec (diag:... or spd2d:...), got '" + spec + "'");
  }
  const ProblemInstance problem = resolve_problem(ref);
  const std::string mtx = prefix + ".mtx";
  const std::string rhs = prefix + ".rhs.txt";
  const std::string x0 = prefix + ".x0.txt";
  write_file_with(mtx, [&](std::ostream& o) { write_matrix_market(o, problem.op); });
  write_file_with(rhs, [&](std::ostream& o) { write_vector(o, problem.rhs); });
  write_file_with(x0, [&](std::ostream& o) { write_vector(o, problem.x0); });
  out << "wrote " << mtx << ' ' << rhs << ' ' << x0 << '\n';
  return kExitConverged;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-method solvers for SPD linear systems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value file mirroring the command-line flags");

  ProblemOptions popts;
  RunOptions ropts;
  BenchOptions bopts;
  SimulateOptions sopts;
  std::string gen_spec;
  std::string gen_prefix = "problem";

  auto* solve = app.add_subcommand("solve", "Solve one problem and report the convergence history");
  add_problem_options(solve, popts);
  add_run_options(solve, ropts);

  auto* bench = app.add_subcommand("bench", "Iteration counts for methods x residual thresholds");
  bench->add_option("--problem", bopts.problems, "Problem reference (repeatable)");
  bench->add_option("--method", bopts.methods, "Rule string or cg (repeatable)");
  bench->add_option("--thresholds", bopts.thresholds, "Strictly decreasing thresholds")->delimiter(',');
  bench->add_option("--repetitions", bopts.repetitions, "Runs averaged per cell")->capture_default_str();
  bench->add_option("--max-iter", bopts.max_iter, "Iteration cap")->capture_default_str();
  const std::map<std::string, BenchFormat> formats{
      {"csv", BenchFormat::CSV}, {"json", BenchFormat::JSON}, {"markdown", BenchFormat::Markdown}};
  bench->add_option("--format", bopts.format, "csv|json|markdown")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  bench->add_option("--stop-norm", bopts.stop_norm, "Tolerance reference: g0 or b")
      ->transform(CLI::CheckedTransformer(kStopNorms, CLI::ignore_case));
  bench->add_option("--rhs", bopts.rhs, "Right-hand side for Matrix Market problems");
  bench->add_option("-o,--output", bopts.output, "Write the table here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Solve with simulated GA or RA steplength evaluation");
  add_problem_options(simulate, popts);
  add_run_options(simulate, ropts);
  simulate->add_option("--p", sopts.processors, "Simulated processor count")->capture_default_str();
  simulate->add_option("--strategy", sopts.strategy, "ga|ra")
      ->check(CLI::IsMember({"ga", "ra"}, CLI::ignore_case))
      ->capture_default_str();
  const std::map<std::string, ReduceOrder> orders{{"ascending", ReduceOrder::Ascending},
                                                  {"tree", ReduceOrder::Tree}};
  simulate->add_option("--reduce", sopts.order, "RA reduction order: ascending|tree")
      ->transform(CLI::CheckedTransformer(orders, CLI::ignore_case));
  simulate->add_option("--trace-csv", sopts.trace_csv, "Write the communication trace as CSV");

  auto* generate = app.add_subcommand("generate", "Write a generated problem as Matrix Market plus vectors");
  generate->add_option("spec", gen_spec, "Generator spec, e.g. spd2d:seed=3,cond=100")->required();
  generate->add_option("-o,--output", gen_prefix, "Output path prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitConverged;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (solve->parsed()) return cmd_solve(popts, ropts, out, err);
    if (bench->parsed()) return cmd_bench(bopts, out);
    if (simulate->parsed()) return cmd_simulate(popts, ropts, sopts, out, err);
    if (generate->parsed()) return cmd_generate(gen_spec, gen_prefix, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace gradsolve::cli
