#pragma once

#include "hardshrink/objective.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hardshrink {

enum class StopRule {
  /// |f(theta^{t-1}) - f(theta^t)| <= epsilon * (1 + |f(theta^t)|) for
  /// `patience` consecutive iterations. An increasing objective never
  /// counts as converged.
  f_decrease,
  /// |grad f(theta^t) restricted to supp(theta^t)| <= epsilon * (1 + |theta^t|).
  grad_support_norm,
  /// |theta^t - theta^{t-1}| <= epsilon * (1 + |theta^t|).
  iterate_change,
};

enum class StopReason { converged, max_iters };

std::string to_string(StopRule rule);
std::string to_string(StopReason reason);

struct SolverConfig {
  /// Projected sparsity (rank for the matrix solver).
  Index s = 1;
  /// Expansion level (two-stage) or partial thresholding level (PHT).
  Index l = 0;
  /// Step size; when unset, default_step_size() is used.
  std::optional<double> eta;
  double epsilon = 1e-12;
  Index max_iters = 1000;
  /// IHT only: follow each projection by a fully-corrective step (HTP).
  bool fully_corrective = false;
  StopRule stop_rule = StopRule::f_decrease;
  Index patience = 3;
  /// Sparsity of the target, used only to size the smoothness estimate.
  std::optional<Index> s_star_hint;
  Index step_trials = 200;
  std::uint64_t step_seed = 0x5eedULL;
  /// Starting point; zero when unset.
  std::optional<Vector> warm_start;
};

struct IterRecord {
  Index t = 0;
  double f_value = 0.0;
  IndexSet support;  // empty for the matrix solver
  Index rank = 0;    // matrix solver only
  Index support_change_count = 0;
  double wall_time = 0.0;  // seconds since the solve started
};

struct IterTrace {
  double initial_f = 0.0;
  double eta = 0.0;
  std::vector<IterRecord> records;
  Index iterations = 0;
  StopReason stop_reason = StopReason::max_iters;
};

struct SolveResult {
  Vector theta;
  IterTrace trace;
};

struct MatrixSolveResult {
  Matrix w;
  IterTrace trace;
};

/// Projected gradient descent onto s-sparse vectors,
///   theta <- P_s(theta - eta * grad f(theta)),
/// from theta = 0. With `fully_corrective` each projection is followed by
/// exact minimization over the new support (hard thresholding pursuit).
SolveResult iht_solve(const Objective& obj, const SolverConfig& cfg);

/// Two-stage hard thresholding. Each iteration expands the support by the
/// l largest off-support gradient entries, minimizes over the expanded set,
/// hard thresholds back to s and minimizes again.
SolveResult two_stage_solve(const Objective& obj, const SolverConfig& cfg);

/// Iterative partial hard thresholding: a gradient step, a projection that
/// admits at most l new coordinates, then a fully-corrective step.
SolveResult pht_solve(const Objective& obj, const SolverConfig& cfg);

/// Projected gradient descent onto rank-s matrices, W <- PM_s(W - eta grad f(W)).
MatrixSolveResult matrix_iht_solve(const MatrixObjective& obj, const SolverConfig& cfg);

enum class StepFamily {
  iht,     // 2 / (3 L)
  grades,  // 1 / L
  pht,     // 1 / (2 L)
};

/// Empirical restricted smoothness of a quadratic objective at `level`.
/// Deterministic in (obj, level, trials, seed).
double restricted_smoothness(const Objective& obj, Index level, Index trials, std::uint64_t seed);

double step_from_smoothness(double smoothness, StepFamily family);

/// Step size from the restricted smoothness at level min(2 s + s*, p), where
/// s* defaults to s when no hint is given.
double default_step_size(const Objective& obj, Index s, StepFamily family,
                         std::optional<Index> s_star_hint = std::nullopt, Index trials = 200,
                         std::uint64_t seed = 0x5eedULL);

/// Matrix counterpart: 2 / (3 L) with L from projected power iteration at
/// rank min(2 s + r*, min(p1, p2)).
double default_matrix_step_size(const MatrixObjective& obj, Index s,
                                std::optional<Index> rank_hint = std::nullopt,
                                std::uint64_t seed = 0x5eedULL);

/// Named solver presets.
enum class Algorithm { iht, htp, grades, two_stage, cosamp, sp, pht, ompr };

std::optional<Algorithm> parse_algorithm(const std::string& name);
std::string to_string(Algorithm algo);

/// Applies the preset to `cfg`: htp sets fully_corrective, cosamp sets
/// l = 2s, sp sets l = s, ompr sets l = 1. Explicit l is kept for
/// two_stage and pht.
SolverConfig apply_preset(Algorithm algo, SolverConfig cfg);

StepFamily step_family(Algorithm algo);

/// Dispatches to the solver behind a preset.
SolveResult run_algorithm(const Objective& obj, Algorithm algo, SolverConfig cfg);

}  // namespace hardshrink
