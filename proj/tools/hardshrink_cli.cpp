#include "hardshrink/bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

using namespace hardshrink;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

ExperimentConfig load_with_env(const std::string& path) {
  ExperimentConfig cfg = load_config(path);
  if (const char* env = std::getenv("HARDSHRINK_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("HARDSHRINK_SEED is not an unsigned integer: " + std::string(env));
    cfg.seed = seed;
  }
  return cfg;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

void write_matrix_instance(const MatrixInstance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json({{"kind", "matrix_sensing"},
              {"p1", inst.w_bar.rows()},
              {"p2", inst.w_bar.cols()},
              {"r_star", inst.r_star},
              {"n", inst.y.size()},
              {"noise_sigma", inst.noise_sigma},
              {"seed", inst.seed},
              {"stream_id", inst.stream_id}},
             dir / "meta.json");
  write_csv(inst.w_bar, dir / "W_bar.csv");
  Matrix flat(static_cast<Index>(inst.sensing.size()), inst.w_bar.size());
  for (std::size_t i = 0; i < inst.sensing.size(); ++i)
    flat.row(static_cast<Index>(i)) = inst.sensing[i].reshaped().transpose();
  write_csv(flat, dir / "sensing.csv");
  write_csv(inst.y, dir / "y.csv");
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_with_env(config_path);
  std::filesystem::create_directories(out_dir);
  write_json(config_to_json(cfg), std::filesystem::path(out_dir) / "config.echo.json");
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    const CellParams cell = cell_params(cfg, cfg.grid[g]);
    for (Index t = 0; t < cfg.trials_per_cell; ++t) {
      const auto dir = std::filesystem::path(out_dir) /
                       ("cell" + std::to_string(g) + "_trial" + std::to_string(t));
      RngStream rng(trial_seed(cfg, t), 0);
      if (cfg.scenario == Scenario::matrix_recovery) {
        write_matrix_instance(
            make_matrix_instance(cfg.base.p, cfg.base.p2, cfg.base.r_star, cell.n, cell.sigma, rng), dir);
      } else {
        write_instance(synth_linear(cell.p, cell.s_star, cell.n, cell.sigma, cell.cov, rng), dir);
      }
    }
  }
  std::cerr << "wrote " << cfg.grid.size() * static_cast<std::size_t>(cfg.trials_per_cell)
            << " instances to " << out_dir << '\n';
  return kOk;
}

struct SolveOptions {
  std::string instance;
  std::string algo;
  std::optional<Index> s;
  std::optional<Index> l;
  std::optional<double> eta;
  std::optional<Index> max_iters;
};

int cmd_solve(const SolveOptions& opt) {
  const AlgorithmSpec algo = parse_algorithm_spec(opt.algo);
  const ProblemInstance inst = read_instance(opt.instance);
  SolverConfig sc;
  sc.s = opt.s.value_or(inst.s_star);
  if (opt.l) sc.l = *opt.l;
  sc.eta = opt.eta;
  if (opt.max_iters) sc.max_iters = *opt.max_iters;
  AlgorithmSpec resolved = algo;
  if (opt.l && !resolved.l) resolved.l = opt.l;
  std::cout << row_to_json(run_single(inst, resolved, sc)).dump(2) << '\n';
  return kOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, unsigned threads, bool no_timing,
              bool also_json) {
  ExperimentConfig cfg = load_with_env(config_path);
  if (no_timing) cfg.record_wall_time = false;
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_json(config_to_json(cfg), dir / "config.echo.json");

  const ExperimentOutput out = run_experiment(cfg, threads);
  emit(out.rows, OutputFormat::csv, dir / "results.csv");
  if (also_json) emit(out.rows, OutputFormat::json, dir / "results.json");
  emit_errors(out.errors, dir / "errors.csv");
  if (!out.rows.empty()) emit_summary(sweep_summary(out.rows), dir / "summary.csv");
  else emit_summary({}, dir / "summary.csv");

  std::cerr << out.rows.size() << " runs, " << out.errors.size() << " failures; results in " << out_dir << '\n';
  for (const auto& e : out.errors)
    std::cerr << "  failed: " << e.algorithm << " " << e.grid_param << "=" << format_double(e.grid_value)
              << " trial " << e.trial << ": " << e.reason << '\n';
  if (out.rows.empty() && !out.errors.empty()) return kRuntimeError;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse and low-rank recovery by iterative hard thresholding"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* gen = app.add_subcommand("gen", "Generate and serialize problem instances");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "Output directory")->required();

  SolveOptions solve_opt;
  auto* solve = app.add_subcommand("solve", "Run one algorithm on a serialized instance");
  solve->add_option("--instance", solve_opt.instance, "Instance directory")->required()->check(CLI::ExistingDirectory);
  solve->add_option("--algo", solve_opt.algo, "Algorithm name")->required();
  solve->add_option("--s", solve_opt.s, "Projected sparsity (default: s* of the instance)");
  solve->add_option("--l", solve_opt.l, "Expansion / partial thresholding level");
  solve->add_option("--eta", solve_opt.eta, "Step size");
  solve->add_option("--max-iters", solve_opt.max_iters, "Iteration cap");

  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool no_timing = false;
  bool also_json = false;
  auto* bench = app.add_subcommand("bench", "Run a full sweep");
  bench->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir, "Output directory")->required();
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--no-timing", no_timing, "Write wall_time_s as 0 for byte-reproducible output");
  bench->add_flag("--json", also_json, "Also write results.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_gen(config_path, out_dir);
    if (*solve) return cmd_solve(solve_opt);
    if (*bench) return cmd_bench(config_path, out_dir, threads, no_timing, also_json);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
