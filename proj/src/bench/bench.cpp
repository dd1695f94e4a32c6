#include "hardshrink/bench.hpp"

#include "hardshrink/baselines.hpp"
#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hardshrink {

using nlohmann::json;

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::noise_sweep: return "noise_sweep";
    case Scenario::dimension_sweep: return "dimension_sweep";
    case Scenario::sparsity_sweep: return "sparsity_sweep";
    case Scenario::oversampling_sweep: return "oversampling_sweep";
    case Scenario::condition_sweep: return "condition_sweep";
    case Scenario::sample_size_sweep: return "sample_size_sweep";
    case Scenario::matrix_recovery: return "matrix_recovery";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::noise_sweep, Scenario::dimension_sweep, Scenario::sparsity_sweep,
                     Scenario::oversampling_sweep, Scenario::condition_sweep,
                     Scenario::sample_size_sweep, Scenario::matrix_recovery})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

std::string grid_param(Scenario scenario) {
  switch (scenario) {
    case Scenario::noise_sweep: return "sigma";
    case Scenario::dimension_sweep: return "p";
    case Scenario::sparsity_sweep: return "s_star";
    case Scenario::oversampling_sweep: return "f_o";
    case Scenario::condition_sweep: return "s_factor";
    case Scenario::sample_size_sweep: return "n";
    case Scenario::matrix_recovery: return "sigma";
  }
  return "unknown";
}

AlgorithmSpec parse_algorithm_spec(const std::string& text) {
  AlgorithmSpec spec;
  spec.label = text;
  std::string name = text;
  const auto open = text.find('(');
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError("malformed algorithm '" + text + "'");
    name = text.substr(0, open);
    const std::string arg = text.substr(open + 1, text.size() - open - 2);
    std::size_t used = 0;
    long long l = 0;
    try {
      l = std::stoll(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size() || l < 1)
      throw ConfigError("algorithm '" + text + "': level must be a positive integer");
    spec.l = static_cast<Index>(l);
  }
  if (name == "ista_lasso" || name == "foba") {
    if (spec.l) throw ConfigError("algorithm '" + name + "' takes no level");
    spec.kind = name == "foba" ? AlgorithmKind::foba : AlgorithmKind::ista_lasso;
    return spec;
  }
  const auto algo = parse_algorithm(name);
  if (!algo) throw ConfigError("unknown algorithm '" + text + "'");
  if (spec.l && *algo != Algorithm::pht && *algo != Algorithm::two_stage)
    throw ConfigError("algorithm '" + name + "' takes no level");
  spec.solver = *algo;
  return spec;
}

namespace {

const std::set<std::string> kBaseKeys = {"p",       "s_star",      "sigma",        "f_o",
                                         "kappa_target", "n",      "s_factor",     "covariance",
                                         "epsilon", "max_iters",   "epsilon_stop", "lasso_lambda",
                                         "p2",      "r_star"};
const std::set<std::string> kTopKeys = {"scenario", "algorithms", "grid",     "trials_per_cell",
                                        "base",     "seed",       "record_wall_time", "description"};

template <class T>
T get_field(const json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

Index integral_value(double v, const std::string& what) {
  if (!is_integral(v) || v < 1) throw ConfigError(what + " must be a positive integer");
  return static_cast<Index>(v);
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kTopKeys.count(key)) throw ConfigError("unknown config field '" + key + "'");

  ExperimentConfig cfg;
  const auto scenario = parse_scenario(get_field<std::string>(j, "scenario", "config"));
  if (!scenario) throw ConfigError("unknown scenario '" + j.at("scenario").get<std::string>() + "'");
  cfg.scenario = *scenario;
  const bool matrix = cfg.scenario == Scenario::matrix_recovery;

  const json& algos = j.at("algorithms");
  if (!algos.is_array() || algos.empty()) throw ConfigError("algorithms must be a non-empty list");
  for (const auto& a : algos) {
    if (!a.is_string()) throw ConfigError("algorithm names must be strings");
    AlgorithmSpec spec = parse_algorithm_spec(a.get<std::string>());
    if (matrix && !(spec.kind == AlgorithmKind::solver && spec.solver == Algorithm::iht))
      throw ConfigError("matrix_recovery supports only 'iht', got '" + spec.label + "'");
    cfg.algorithms.push_back(std::move(spec));
  }

  const json& grid = j.at("grid");
  const std::string param = grid_param(cfg.scenario);
  json values;
  if (grid.is_array()) {
    values = grid;
  } else if (grid.is_object()) {
    if (grid.size() != 1 || !grid.contains(param))
      throw ConfigError("grid for " + to_string(cfg.scenario) + " must have exactly the key '" + param + "'");
    values = grid.at(param);
  } else {
    throw ConfigError("grid must be a list or an object");
  }
  if (!values.is_array() || values.empty()) throw ConfigError("grid values must be a non-empty list");
  for (const auto& v : values) {
    if (!v.is_number()) throw ConfigError("grid values must be numbers");
    const double x = v.get<double>();
    const bool sigma_grid = param == "sigma";
    if (!std::isfinite(x) || (sigma_grid ? x < 0.0 : x <= 0.0))
      throw ConfigError("grid value " + v.dump() + " out of range for " + param);
    if (param == "p" || param == "s_star" || param == "n") integral_value(x, "grid value for " + param);
    cfg.grid.push_back(x);
  }

  cfg.trials_per_cell = get_field<Index>(j, "trials_per_cell", "config");
  if (cfg.trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  if (j.contains("seed")) cfg.seed = get_field<std::uint64_t>(j, "seed", "config");
  if (j.contains("record_wall_time")) cfg.record_wall_time = get_field<bool>(j, "record_wall_time", "config");

  BaseParams& b = cfg.base;
  if (matrix) {
    b.p = 30;
    b.sigma = 0.0;
  }
  if (j.contains("base")) {
    const json& base = j.at("base");
    if (!base.is_object()) throw ConfigError("base must be an object");
    for (const auto& [key, _] : base.items())
      if (!kBaseKeys.count(key)) throw ConfigError("unknown base field '" + key + "'");
    if (base.contains("p")) b.p = get_field<Index>(base, "p", "base");
    if (base.contains("s_star")) b.s_star = get_field<Index>(base, "s_star", "base");
    if (base.contains("sigma")) b.sigma = get_field<double>(base, "sigma", "base");
    if (base.contains("f_o")) b.f_o = get_field<double>(base, "f_o", "base");
    if (base.contains("kappa_target")) b.kappa_target = get_field<double>(base, "kappa_target", "base");
    if (base.contains("n")) b.n = get_field<Index>(base, "n", "base");
    if (base.contains("s_factor")) b.s_factor = get_field<double>(base, "s_factor", "base");
    if (base.contains("covariance")) {
      const auto kind = parse_covariance_kind(get_field<std::string>(base, "covariance", "base"));
      if (!kind) throw ConfigError("unknown covariance '" + base.at("covariance").get<std::string>() + "'");
      b.covariance = kind;
    }
    if (base.contains("epsilon")) b.epsilon = get_field<double>(base, "epsilon", "base");
    if (base.contains("max_iters")) b.max_iters = get_field<Index>(base, "max_iters", "base");
    if (base.contains("epsilon_stop")) b.epsilon_stop = get_field<double>(base, "epsilon_stop", "base");
    if (base.contains("lasso_lambda")) b.lasso_lambda = get_field<double>(base, "lasso_lambda", "base");
    if (base.contains("p2")) b.p2 = get_field<Index>(base, "p2", "base");
    if (base.contains("r_star")) b.r_star = get_field<Index>(base, "r_star", "base");
  }
  if (b.p < 2) throw ConfigError("base: need p >= 2");
  if (!matrix && (b.s_star < 1 || b.s_star > b.p)) throw ConfigError("base: need 1 <= s_star <= p");
  if (!(b.sigma >= 0.0) || !(b.f_o > 0.0) || !(b.kappa_target > 1.0) || !(b.s_factor > 0.0))
    throw ConfigError("base: sigma >= 0, f_o > 0, kappa_target > 1 and s_factor > 0 required");
  if (b.n && *b.n < 1) throw ConfigError("base: n must be >= 1");
  if (!(b.epsilon > 0.0 && b.epsilon <= 1.0)) throw ConfigError("base: epsilon must lie in (0, 1]");
  if (b.max_iters < 1 || !(b.epsilon_stop >= 0.0)) throw ConfigError("base: bad stopping parameters");
  if (b.lasso_lambda && !(*b.lasso_lambda >= 0.0)) throw ConfigError("base: lasso_lambda must be >= 0");
  if (matrix && (b.p2 < 1 || b.r_star < 1 || b.r_star > std::min(b.p, b.p2)))
    throw ConfigError("base: need 1 <= r_star <= min(p, p2)");

  // Every cell must describe a valid instance.
  for (double v : cfg.grid) {
    try {
      (void)cell_params(cfg, v);
    } catch (const ArgumentError& e) {
      throw ConfigError("grid value " + format_double(v) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json algos = json::array();
  for (const auto& a : cfg.algorithms) algos.push_back(a.label);
  const BaseParams& b = cfg.base;
  json base = {{"p", b.p},           {"s_star", b.s_star},   {"sigma", b.sigma},
               {"f_o", b.f_o},       {"kappa_target", b.kappa_target},
               {"s_factor", b.s_factor}, {"epsilon", b.epsilon},
               {"max_iters", b.max_iters}, {"epsilon_stop", b.epsilon_stop},
               {"p2", b.p2},         {"r_star", b.r_star}};
  if (b.n) base["n"] = *b.n;
  if (b.covariance) base["covariance"] = to_string(*b.covariance);
  if (b.lasso_lambda) base["lasso_lambda"] = *b.lasso_lambda;
  return {{"scenario", to_string(cfg.scenario)},
          {"algorithms", algos},
          {"grid", {{grid_param(cfg.scenario), cfg.grid}}},
          {"trials_per_cell", cfg.trials_per_cell},
          {"base", base},
          {"seed", cfg.seed},
          {"record_wall_time", cfg.record_wall_time}};
}

CellParams cell_params(const ExperimentConfig& cfg, double v) {
  const BaseParams& b = cfg.base;
  CellParams c;
  c.p = b.p;
  c.s_star = b.s_star;
  c.sigma = b.sigma;
  double f_o = b.f_o;
  double s_factor = b.s_factor;
  std::optional<Index> n = b.n;
  switch (cfg.scenario) {
    case Scenario::noise_sweep:
    case Scenario::matrix_recovery: c.sigma = v; break;
    case Scenario::dimension_sweep: c.p = static_cast<Index>(v); break;
    case Scenario::sparsity_sweep: c.s_star = static_cast<Index>(v); break;
    case Scenario::oversampling_sweep: f_o = v; break;
    case Scenario::condition_sweep: s_factor = v; break;
    case Scenario::sample_size_sweep: n = static_cast<Index>(v); break;
  }
  if (cfg.scenario == Scenario::matrix_recovery) {
    c.s_star = b.r_star;
    c.n = n.value_or(6 * b.r_star * (b.p + b.p2));
    c.s = std::min<Index>(static_cast<Index>(std::ceil(s_factor * static_cast<double>(b.r_star))),
                          std::min(b.p, b.p2));
    return c;
  }
  if (c.s_star < 1 || c.s_star > c.p) throw ArgumentError("need 1 <= s_star <= p");
  c.n = n ? *n : oversampled_size(f_o, c.s_star, c.p);
  c.s = static_cast<Index>(std::llround(s_factor * static_cast<double>(c.s_star)));
  c.s = std::clamp<Index>(c.s, 1, c.p);
  const CovarianceKind kind =
      b.covariance.value_or(cfg.scenario == Scenario::condition_sweep ? CovarianceKind::planted
                                                                       : CovarianceKind::identity);
  switch (kind) {
    case CovarianceKind::identity: c.cov = CovarianceSpec::identity(c.p); break;
    case CovarianceKind::two_block: c.cov = CovarianceSpec::two_block(c.p, b.epsilon); break;
    case CovarianceKind::planted:
      if (c.s_star % 2 != 0) throw ArgumentError("planted covariance needs an even s_star");
      if (c.p - c.s_star < c.s_star / 2) throw ArgumentError("planted covariance needs p >= 1.5 s_star");
      c.cov = CovarianceSpec::planted(c.p, b.kappa_target);
      break;
  }
  return c;
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, Index trial) {
  return cfg.seed + static_cast<std::uint64_t>(trial);
}

namespace {

using Clock = std::chrono::steady_clock;

QuadraticObjective objective_for(const ProblemInstance& inst) {
  switch (inst.corruption) {
    case CorruptionKind::none: return make_least_squares(inst.X, inst.y);
    case CorruptionKind::additive:
      if (!inst.X_corrupted || !inst.sigma_w) throw ArgumentError("additive instance lacks corrupted data");
      return make_corrected_additive(*inst.X_corrupted, inst.y, *inst.sigma_w);
    case CorruptionKind::missing:
      if (!inst.X_corrupted || !inst.mask) throw ArgumentError("missing-data instance lacks mask");
      return make_corrected_missing(*inst.X_corrupted, *inst.mask, inst.y, inst.nu);
  }
  throw ArgumentError("unknown corruption");
}

ResultRow solve_on(const QuadraticObjective& obj, const ProblemInstance& inst, const AlgorithmSpec& algo,
                   SolverConfig solver_cfg, std::optional<double> lasso_lambda) {
  Vector theta;
  Index iters = 0;
  const auto start = Clock::now();
  switch (algo.kind) {
    case AlgorithmKind::solver: {
      if (algo.l) solver_cfg.l = *algo.l;
      if ((algo.solver == Algorithm::pht || algo.solver == Algorithm::two_stage) && solver_cfg.l < 1)
        solver_cfg.l = 1;
      SolveResult res = run_algorithm(obj, algo.solver, solver_cfg);
      theta = std::move(res.theta);
      iters = res.trace.iterations;
      break;
    }
    case AlgorithmKind::ista_lasso: {
      LassoConfig lc;
      lc.lambda = lasso_lambda.value_or(default_lasso_lambda(inst.noise_sigma, inst.p(), inst.n()));
      LassoResult res = ista_lasso(obj, lc);
      theta = std::move(res.theta);
      iters = res.trace.iterations;
      break;
    }
    case AlgorithmKind::foba: {
      FobaConfig fc;
      fc.target_sparsity = solver_cfg.s;
      SolveResult res = foba(obj, fc);
      theta = std::move(res.theta);
      iters = res.trace.iterations;
      break;
    }
  }
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  ResultRow row;
  row.algorithm = algo.label;
  const SupportError err = support_error(theta, inst.theta_bar, inst.s_star);
  row.undiscovered = err.undiscovered;
  row.support_err_frac = err.fraction;
  row.l2_err = (theta - inst.theta_bar).norm();
  row.f_final = obj.value(theta);
  row.iters = iters;
  row.wall_time_s = wall;
  row.seed = inst.seed;
  return row;
}

struct TaskOutput {
  std::vector<std::pair<std::size_t, ResultRow>> rows;  // (algorithm index, row)
  std::vector<ErrorRow> errors;
};

TaskOutput run_vector_task(const ExperimentConfig& cfg, double grid_value, Index trial) {
  const CellParams cell = cell_params(cfg, grid_value);
  const std::string scenario = to_string(cfg.scenario);
  const std::string param = grid_param(cfg.scenario);
  const std::uint64_t seed = trial_seed(cfg, trial);
  TaskOutput out;
  auto fail_all = [&](const std::string& reason) {
    for (const auto& a : cfg.algorithms)
      out.errors.push_back({scenario, a.label, param, grid_value, trial, seed, reason});
  };

  ProblemInstance inst;
  std::optional<QuadraticObjective> built;
  try {
    RngStream rng(seed, 0);
    inst = synth_linear(cell.p, cell.s_star, cell.n, cell.sigma, cell.cov, rng);
    built.emplace(objective_for(inst));
  } catch (const std::exception& e) {
    fail_all(std::string("instance generation: ") + e.what());
    return out;
  }
  const QuadraticObjective& obj = *built;

  // Smoothness estimates are shared by every algorithm on this instance.
  std::map<Index, double> smoothness;
  auto smoothness_at = [&](Index level) {
    auto it = smoothness.find(level);
    if (it == smoothness.end())
      it = smoothness.emplace(level, restricted_smoothness(obj, level, 200, 0x5eedULL)).first;
    return it->second;
  };

  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const AlgorithmSpec& algo = cfg.algorithms[a];
    try {
      SolverConfig sc;
      sc.s = cell.s;
      sc.max_iters = cfg.base.max_iters;
      sc.epsilon = cfg.base.epsilon_stop;
      sc.s_star_hint = cell.s_star;
      if (algo.kind == AlgorithmKind::solver) {
        const bool uses_step = algo.solver != Algorithm::two_stage && algo.solver != Algorithm::cosamp &&
                               algo.solver != Algorithm::sp;
        if (uses_step) {
          const Index level = std::min(2 * cell.s + cell.s_star, cell.p);
          sc.eta = step_from_smoothness(smoothness_at(level), step_family(algo.solver));
        }
      }
      ResultRow row = solve_on(obj, inst, algo, sc, cfg.base.lasso_lambda);
      row.scenario = scenario;
      row.grid_param = param;
      row.grid_value = grid_value;
      row.trial = trial;
      if (!cfg.record_wall_time) row.wall_time_s = 0.0;
      out.rows.emplace_back(a, std::move(row));
    } catch (const std::exception& e) {
      out.errors.push_back({scenario, algo.label, param, grid_value, trial, seed, e.what()});
    }
  }
  return out;
}

TaskOutput run_matrix_task(const ExperimentConfig& cfg, double grid_value, Index trial) {
  const CellParams cell = cell_params(cfg, grid_value);
  const std::string scenario = to_string(cfg.scenario);
  const std::string param = grid_param(cfg.scenario);
  const std::uint64_t seed = trial_seed(cfg, trial);
  TaskOutput out;
  try {
    RngStream rng(seed, 0);
    const MatrixInstance inst =
        make_matrix_instance(cfg.base.p, cfg.base.p2, cfg.base.r_star, cell.n, cell.sigma, rng);
    const MatrixLeastSquares obj = make_matrix_least_squares(inst.sensing, inst.y);
    const Index r = inst.r_star;
    const Matrix u_bar = svd(inst.w_bar).U.leftCols(r);
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      SolverConfig sc;
      sc.s = cell.s;
      sc.max_iters = cfg.base.max_iters;
      sc.epsilon = cfg.base.epsilon_stop;
      sc.s_star_hint = r;
      const auto start = Clock::now();
      const MatrixSolveResult res = matrix_iht_solve(obj, sc);
      const double wall = std::chrono::duration<double>(Clock::now() - start).count();
      const Matrix u_hat = svd(res.w).U.leftCols(r);
      const double overlap = (u_bar.transpose() * u_hat).squaredNorm();
      ResultRow row;
      row.scenario = scenario;
      row.algorithm = cfg.algorithms[a].label;
      row.grid_param = param;
      row.grid_value = grid_value;
      row.trial = trial;
      row.undiscovered = std::max<Index>(0, r - static_cast<Index>(std::llround(overlap)));
      row.support_err_frac = static_cast<double>(row.undiscovered) / static_cast<double>(r);
      row.l2_err = (res.w - inst.w_bar).norm();
      row.f_final = obj.value(res.w);
      row.iters = res.trace.iterations;
      row.wall_time_s = cfg.record_wall_time ? wall : 0.0;
      row.seed = seed;
      out.rows.emplace_back(a, std::move(row));
    }
  } catch (const std::exception& e) {
    for (const auto& a : cfg.algorithms)
      out.errors.push_back({scenario, a.label, param, grid_value, trial, seed, e.what()});
  }
  return out;
}

}  // namespace

ResultRow run_single(const ProblemInstance& inst, const AlgorithmSpec& algo, SolverConfig solver_cfg,
                     std::optional<double> lasso_lambda) {
  const QuadraticObjective obj = objective_for(inst);
  if (!solver_cfg.s_star_hint) solver_cfg.s_star_hint = inst.s_star;
  ResultRow row = solve_on(obj, inst, algo, std::move(solver_cfg), lasso_lambda);
  row.scenario = "single";
  row.grid_param = "none";
  return row;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  const std::size_t cells = cfg.grid.size();
  const auto trials = static_cast<std::size_t>(cfg.trials_per_cell);
  const std::size_t tasks = cells * trials;
  std::vector<TaskOutput> results(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks; k = next++) {
      const std::size_t g = k / trials;
      const auto t = static_cast<Index>(k % trials);
      results[k] = cfg.scenario == Scenario::matrix_recovery ? run_matrix_task(cfg, cfg.grid[g], t)
                                                             : run_vector_task(cfg, cfg.grid[g], t);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tasks, 1))));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Canonical order: grid index, algorithm index, trial.
  struct Keyed {
    std::size_t g, a;
    Index t;
    ResultRow row;
  };
  std::vector<Keyed> keyed;
  ExperimentOutput out;
  for (std::size_t k = 0; k < tasks; ++k) {
    for (auto& [a, row] : results[k].rows) keyed.push_back({k / trials, a, row.trial, std::move(row)});
    for (auto& e : results[k].errors) out.errors.push_back(std::move(e));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.g != y.g) return x.g < y.g;
    if (x.a != y.a) return x.a < y.a;
    return x.t < y.t;
  });
  out.rows.reserve(keyed.size());
  for (auto& k : keyed) out.rows.push_back(std::move(k.row));
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> sweep_summary(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ArgumentError("sweep_summary: no rows");
  std::vector<SummaryRow> out;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    std::size_t g = 0;
    for (; g < out.size(); ++g)
      if (out[g].scenario == r.scenario && out[g].algorithm == r.algorithm &&
          out[g].grid_param == r.grid_param && out[g].grid_value == r.grid_value)
        break;
    if (g == out.size()) {
      SummaryRow s;
      s.scenario = r.scenario;
      s.algorithm = r.algorithm;
      s.grid_param = r.grid_param;
      s.grid_value = r.grid_value;
      out.push_back(s);
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto summarize = [&](auto field) {
      std::vector<double> v;
      for (const ResultRow* r : groups[g]) v.push_back(static_cast<double>(field(*r)));
      return MetricSummary{quantile(v, 0.5), quantile(v, 0.25), quantile(v, 0.75)};
    };
    SummaryRow& s = out[g];
    s.count = static_cast<Index>(groups[g].size());
    s.undiscovered = summarize([](const ResultRow& r) { return r.undiscovered; });
    s.support_err_frac = summarize([](const ResultRow& r) { return r.support_err_frac; });
    s.l2_err = summarize([](const ResultRow& r) { return r.l2_err; });
    s.f_final = summarize([](const ResultRow& r) { return r.f_final; });
    s.iters = summarize([](const ResultRow& r) { return r.iters; });
    s.wall_time_s = summarize([](const ResultRow& r) { return r.wall_time_s; });
  }
  return out;
}

const char* const kResultsHeader =
    "scenario,algorithm,grid_param,grid_value,trial,undiscovered,support_err_frac,l2_err,f_final,iters,"
    "wall_time_s,seed";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

json row_to_json(const ResultRow& r) {
  return {{"scenario", r.scenario},         {"algorithm", r.algorithm},
          {"grid_param", r.grid_param},     {"grid_value", r.grid_value},
          {"trial", r.trial},               {"undiscovered", r.undiscovered},
          {"support_err_frac", r.support_err_frac}, {"l2_err", r.l2_err},
          {"f_final", r.f_final},           {"iters", r.iters},
          {"wall_time_s", r.wall_time_s},   {"seed", r.seed}};
}

ResultRow row_from_json(const json& j) {
  ResultRow r;
  r.scenario = j.at("scenario").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.grid_param = j.at("grid_param").get<std::string>();
  r.grid_value = j.at("grid_value").get<double>();
  r.trial = j.at("trial").get<Index>();
  r.undiscovered = j.at("undiscovered").get<Index>();
  r.support_err_frac = j.at("support_err_frac").get<double>();
  r.l2_err = j.at("l2_err").get<double>();
  r.f_final = j.at("f_final").get<double>();
  r.iters = j.at("iters").get<Index>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

std::vector<ResultRow> read_rows_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  std::vector<ResultRow> rows;
  for (const auto& item : j) rows.push_back(row_from_json(item));
  return rows;
}

void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  if (format == OutputFormat::csv) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows)
      out << csv_field(r.scenario) << ',' << csv_field(r.algorithm) << ',' << csv_field(r.grid_param) << ','
          << format_double(r.grid_value) << ',' << r.trial << ',' << r.undiscovered << ','
          << format_double(r.support_err_frac) << ',' << format_double(r.l2_err) << ','
          << format_double(r.f_final) << ',' << r.iters << ',' << format_double(r.wall_time_s) << ','
          << r.seed << '\n';
  } else {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(row_to_json(r));
    out << arr.dump(2) << '\n';
  }
  finish_output(out, path);
}

void emit_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "scenario,algorithm,grid_param,grid_value,count";
  for (const char* m : {"undiscovered", "support_err_frac", "l2_err", "f_final", "iters", "wall_time_s"})
    out << ',' << m << "_median," << m << "_iqr";
  out << '\n';
  for (const auto& s : rows) {
    out << csv_field(s.scenario) << ',' << csv_field(s.algorithm) << ',' << csv_field(s.grid_param) << ','
        << format_double(s.grid_value) << ',' << s.count;
    for (const MetricSummary* m : {&s.undiscovered, &s.support_err_frac, &s.l2_err, &s.f_final, &s.iters,
                                   &s.wall_time_s})
      out << ',' << format_double(m->median) << ',' << format_double(m->iqr());
    out << '\n';
  }
  finish_output(out, path);
}

void emit_errors(const std::vector<ErrorRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "scenario,algorithm,grid_param,grid_value,trial,seed,reason\n";
  for (const auto& e : rows)
    out << csv_field(e.scenario) << ',' << csv_field(e.algorithm) << ',' << csv_field(e.grid_param) << ','
        << format_double(e.grid_value) << ',' << e.trial << ',' << e.seed << ',' << csv_field(e.reason)
        << '\n';
  finish_output(out, path);
}

}  // namespace hardshrink
