#pragma once

#include "hardshrink/solvers.hpp"
#include "hardshrink/statgen.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hardshrink {

/// Raised for malformed or inconsistent experiment configs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario {
  noise_sweep,
  dimension_sweep,
  sparsity_sweep,
  oversampling_sweep,
  condition_sweep,
  sample_size_sweep,
  matrix_recovery,
};

std::string to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(const std::string& name);

/// Name of the parameter swept by a scenario (e.g. "sigma" for noise_sweep).
std::string grid_param(Scenario scenario);

enum class AlgorithmKind { solver, ista_lasso, foba };

struct AlgorithmSpec {
  /// Name as written in results ("iht", "pht(3)", ...).
  std::string label;
  AlgorithmKind kind = AlgorithmKind::solver;
  Algorithm solver = Algorithm::iht;
  std::optional<Index> l;
};

/// Accepts iht, htp, grades, cosamp, sp, ompr, two_stage, pht, pht(l),
/// two_stage(l), ista_lasso, foba. Throws ConfigError otherwise.
AlgorithmSpec parse_algorithm_spec(const std::string& text);

struct BaseParams {
  Index p = 2000;
  Index s_star = 20;
  double sigma = 0.1;
  double f_o = 2.0;
  double kappa_target = 50.0;
  /// Fixed sample size; derived from f_o when unset.
  std::optional<Index> n;
  /// Projected sparsity as a multiple of s_star.
  double s_factor = 1.0;
  /// identity, two_block or planted; condition_sweep defaults to planted.
  std::optional<CovarianceKind> covariance;
  double epsilon = 0.1;
  Index max_iters = 1000;
  double epsilon_stop = 1e-12;
  std::optional<double> lasso_lambda;
  /// Matrix scenario: W is p x p2 with rank r_star.
  Index p2 = 30;
  Index r_star = 2;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::noise_sweep;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<double> grid;
  Index trials_per_cell = 1;
  BaseParams base;
  std::uint64_t seed = 0;
  /// When false, wall_time_s is written as 0 so output bytes depend only on
  /// the config.
  bool record_wall_time = true;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct ResultRow {
  std::string scenario;
  std::string algorithm;
  std::string grid_param;
  double grid_value = 0.0;
  Index trial = 0;
  Index undiscovered = 0;
  double support_err_frac = 0.0;
  double l2_err = 0.0;
  double f_final = 0.0;
  Index iters = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ErrorRow {
  std::string scenario;
  std::string algorithm;
  std::string grid_param;
  double grid_value = 0.0;
  Index trial = 0;
  std::uint64_t seed = 0;
  std::string reason;
};

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::vector<ErrorRow> errors;
};

/// Concrete instance parameters of one grid cell.
struct CellParams {
  Index p = 0;
  Index s_star = 0;
  Index n = 0;
  Index s = 0;
  double sigma = 0.0;
  CovarianceSpec cov;
};

CellParams cell_params(const ExperimentConfig& cfg, double grid_value);

/// Seed of the instance used by trial t in every cell.
std::uint64_t trial_seed(const ExperimentConfig& cfg, Index trial);

/// Runs every grid cell x trial x algorithm. Instances are shared across
/// algorithms; trials run on up to `threads` workers. Rows come back sorted
/// by (grid index, algorithm index, trial). Failed runs become error rows.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, unsigned threads = 1);

/// Runs one algorithm on one vector instance.
ResultRow run_single(const ProblemInstance& inst, const AlgorithmSpec& algo, SolverConfig solver_cfg,
                     std::optional<double> lasso_lambda = std::nullopt);

struct MetricSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

struct SummaryRow {
  std::string scenario;
  std::string algorithm;
  std::string grid_param;
  double grid_value = 0.0;
  Index count = 0;
  MetricSummary undiscovered;
  MetricSummary support_err_frac;
  MetricSummary l2_err;
  MetricSummary f_final;
  MetricSummary iters;
  MetricSummary wall_time_s;
};

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Median and quartiles per (scenario, algorithm, grid point), in order of
/// first appearance.
std::vector<SummaryRow> sweep_summary(const std::vector<ResultRow>& rows);

enum class OutputFormat { csv, json };

extern const char* const kResultsHeader;

void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::filesystem::path& path);
void emit_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
void emit_errors(const std::vector<ErrorRow>& rows, const std::filesystem::path& path);

nlohmann::json row_to_json(const ResultRow& row);
ResultRow row_from_json(const nlohmann::json& j);
std::vector<ResultRow> read_rows_json(const std::filesystem::path& path);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace hardshrink
