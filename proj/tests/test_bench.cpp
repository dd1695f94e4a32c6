#include "hardshrink/bench.hpp"
#include "hardshrink/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hardshrink;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json{{"scenario", "noise_sweep"},
              {"algorithms", {"iht", "htp"}},
              {"grid", {0.0, 0.1}},
              {"trials_per_cell", 2},
              {"base", {{"p", 200}, {"s_star", 5}}},
              {"seed", 11},
              {"record_wall_time", false}};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hardshrink_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Config, ParsesAndEchoes) {
  const ExperimentConfig cfg = parse_config(small_config());
  EXPECT_EQ(cfg.scenario, Scenario::noise_sweep);
  ASSERT_EQ(cfg.algorithms.size(), 2u);
  EXPECT_EQ(cfg.algorithms[1].solver, Algorithm::htp);
  EXPECT_EQ(cfg.grid, (std::vector<double>{0.0, 0.1}));
  EXPECT_EQ(cfg.base.p, 200);
  EXPECT_EQ(cfg.seed, 11u);
  const ExperimentConfig again = parse_config(config_to_json(cfg));
  EXPECT_EQ(config_to_json(again), config_to_json(cfg));
}

TEST(Config, GridAsObjectKeyedByParameter) {
  json j = small_config();
  j["grid"] = json{{"sigma", {0.2, 0.3}}};
  EXPECT_EQ(parse_config(j).grid, (std::vector<double>{0.2, 0.3}));
  j["grid"] = json{{"p", {100}}};
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, RejectsInvalidInput) {
  const auto rejects = [](const std::function<void(json&)>& mutate) {
    json j = small_config();
    mutate(j);
    EXPECT_THROW(parse_config(j), ConfigError) << j.dump();
  };
  rejects([](json& j) { j["algorithms"] = {"iht", "lars"}; });
  rejects([](json& j) { j["algorithms"] = json::array(); });
  rejects([](json& j) { j["scenario"] = "bogus"; });
  rejects([](json& j) { j["trials_per_cell"] = 0; });
  rejects([](json& j) { j["grid"] = {-0.1}; });
  rejects([](json& j) { j["grid"] = json::array(); });
  rejects([](json& j) { j["unknown_key"] = 1; });
  rejects([](json& j) { j["base"]["q"] = 1; });
  rejects([](json& j) { j["base"]["s_star"] = 500; });
  rejects([](json& j) { j["algorithms"] = {"pht(0)"}; });
  rejects([](json& j) { j["algorithms"] = {"pht(x)"}; });
  rejects([](json& j) { j.erase("scenario"); });
}

TEST(Config, AlgorithmSpecs) {
  const AlgorithmSpec pht = parse_algorithm_spec("pht(3)");
  EXPECT_EQ(pht.label, "pht(3)");
  EXPECT_EQ(pht.solver, Algorithm::pht);
  EXPECT_EQ(pht.l, 3);
  EXPECT_EQ(parse_algorithm_spec("two_stage(4)").l, 4);
  EXPECT_EQ(parse_algorithm_spec("foba").kind, AlgorithmKind::foba);
  EXPECT_EQ(parse_algorithm_spec("ista_lasso").kind, AlgorithmKind::ista_lasso);
  for (const char* name : {"iht", "htp", "grades", "cosamp", "sp", "ompr"})
    EXPECT_EQ(parse_algorithm_spec(name).kind, AlgorithmKind::solver);
  EXPECT_THROW(parse_algorithm_spec("omp"), ConfigError);
}

TEST(Config, CellParameters) {
  json j = small_config();
  j["base"] = {{"p", 2000}, {"s_star", 20}};
  const CellParams c = cell_params(parse_config(j), 0.1);
  EXPECT_EQ(c.n, 305);
  EXPECT_EQ(c.s, 20);
  EXPECT_EQ(c.sigma, 0.1);
  j["scenario"] = "condition_sweep";
  j["grid"] = {1, 2, 5, 10};
  const CellParams cond = cell_params(parse_config(j), 5);
  EXPECT_EQ(cond.s, 100);
  EXPECT_EQ(cond.cov.kind, CovarianceKind::planted);
  j["scenario"] = "sample_size_sweep";
  j["grid"] = {610};
  EXPECT_EQ(cell_params(parse_config(j), 610).n, 610);
}

TEST(Experiment, NoiseSweepSingleAlgorithm) {
  json j = small_config();
  j["algorithms"] = {"iht"};
  j["trials_per_cell"] = 1;
  j.erase("base");
  const ExperimentOutput out = run_experiment(parse_config(j));
  ASSERT_EQ(out.rows.size(), 2u);
  EXPECT_TRUE(out.errors.empty());
  EXPECT_EQ(out.rows[0].grid_value, 0.0);
  EXPECT_EQ(out.rows[0].undiscovered, 0);
  EXPECT_EQ(out.rows[0].grid_param, "sigma");
  for (const ResultRow& r : out.rows) {
    EXPECT_TRUE(std::isfinite(r.l2_err));
    EXPECT_TRUE(std::isfinite(r.f_final));
    EXPECT_EQ(r.wall_time_s, 0.0);
  }
}

TEST(Experiment, CommonInstancesAcrossAlgorithmsAndCells) {
  const ExperimentConfig cfg = parse_config(small_config());
  const ExperimentOutput out = run_experiment(cfg);
  ASSERT_EQ(out.rows.size(), 8u);
  for (const ResultRow& r : out.rows) EXPECT_EQ(r.seed, trial_seed(cfg, r.trial));
  // Sorted by grid point, then algorithm, then trial.
  EXPECT_EQ(out.rows[0].algorithm, "iht");
  EXPECT_EQ(out.rows[1].algorithm, "iht");
  EXPECT_EQ(out.rows[1].trial, 1);
  EXPECT_EQ(out.rows[2].algorithm, "htp");
  EXPECT_EQ(out.rows[4].grid_value, 0.1);
}

TEST(Experiment, ThreadCountDoesNotChangeRows) {
  const ExperimentConfig cfg = parse_config(small_config());
  const ExperimentOutput one = run_experiment(cfg, 1);
  const ExperimentOutput four = run_experiment(cfg, 4);
  EXPECT_EQ(one.rows, four.rows);
}

TEST(Experiment, RerunProducesIdenticalBytes) {
  const ExperimentConfig cfg = parse_config(small_config());
  const fs::path dir = scratch("rerun");
  emit(run_experiment(cfg, 2).rows, OutputFormat::csv, dir / "a.csv");
  emit(run_experiment(cfg, 1).rows, OutputFormat::csv, dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  fs::remove_all(dir);
}

TEST(Experiment, MatrixScenario) {
  const json j{{"scenario", "matrix_recovery"},
               {"algorithms", {"iht"}},
               {"grid", {0.0}},
               {"trials_per_cell", 1},
               {"base", {{"p", 10}, {"p2", 10}, {"r_star", 2}}},
               {"seed", 3},
               {"record_wall_time", false}};
  const ExperimentOutput out = run_experiment(parse_config(j));
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0].undiscovered, 0);
  EXPECT_LT(out.rows[0].l2_err, 1e-3);
  EXPECT_EQ(out.rows[0].grid_param, "sigma");
}

TEST(Summary, MedianMatchesSortOracle) {
  RngStream rng(120, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.uniform_index(25);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double oracle = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    EXPECT_NEAR(quantile(v, 0.5), oracle, 1e-15);
    EXPECT_EQ(quantile(v, 0.0), sorted.front());
    EXPECT_EQ(quantile(v, 1.0), sorted.back());
  }
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_THROW(quantile({}, 0.5), ArgumentError);
  EXPECT_THROW(quantile({1.0}, 1.5), ArgumentError);
}

TEST(Summary, GroupsAndOrderStatistics) {
  std::vector<ResultRow> rows;
  for (Index t = 0; t < 3; ++t) {
    ResultRow r;
    r.scenario = "noise_sweep";
    r.algorithm = "iht";
    r.grid_param = "sigma";
    r.grid_value = 0.1;
    r.trial = t;
    r.undiscovered = t == 0 ? 4 : t == 1 ? 1 : 2;
    r.l2_err = static_cast<double>(t);
    rows.push_back(r);
  }
  ResultRow single = rows[0];
  single.algorithm = "htp";
  rows.push_back(single);
  const std::vector<SummaryRow> s = sweep_summary(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].count, 3);
  EXPECT_EQ(s[0].undiscovered.median, 2.0);
  EXPECT_EQ(s[0].l2_err.median, 1.0);
  EXPECT_EQ(s[0].l2_err.iqr(), 1.0);
  EXPECT_EQ(s[1].count, 1);
  EXPECT_EQ(s[1].undiscovered.median, 4.0);
  EXPECT_EQ(s[1].undiscovered.iqr(), 0.0);
}

TEST(Emit, CsvHeaderAndColumnCount) {
  const ExperimentOutput out = run_experiment(parse_config(small_config()));
  const fs::path dir = scratch("csv");
  emit(out.rows, OutputFormat::csv, dir / "r.csv");
  const auto lines = lines_of(slurp(dir / "r.csv"));
  ASSERT_EQ(lines.size(), out.rows.size() + 1);
  EXPECT_EQ(lines[0], "scenario,algorithm,grid_param,grid_value,trial,undiscovered,support_err_frac,l2_err,f_final,iters,wall_time_s,seed");
  EXPECT_EQ(lines[0], kResultsHeader);
  for (const auto& line : lines) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11) << line;
  fs::remove_all(dir);
}

TEST(Emit, EmptyRowsGiveHeaderOnly) {
  const fs::path dir = scratch("empty");
  emit({}, OutputFormat::csv, dir / "r.csv");
  EXPECT_EQ(slurp(dir / "r.csv"), std::string(kResultsHeader) + "\n");
  fs::remove_all(dir);
}

TEST(Emit, JsonRoundTrip) {
  const ExperimentOutput out = run_experiment(parse_config(small_config()));
  const fs::path dir = scratch("json");
  emit(out.rows, OutputFormat::json, dir / "r.json");
  EXPECT_EQ(read_rows_json(dir / "r.json"), out.rows);
  const json parsed = json::parse(slurp(dir / "r.json"));
  ASSERT_TRUE(parsed.is_array());
  EXPECT_TRUE(parsed[0].contains("support_err_frac"));
  fs::remove_all(dir);
}

TEST(Emit, UnwritablePathNamesThePath) {
  try {
    emit({}, OutputFormat::csv, "/nonexistent_dir/r.csv");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir/r.csv"), std::string::npos);
  }
}

TEST(Emit, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ShippedConfigs, AllParse) {
  const fs::path root = HS_CONFIG_DIR;
  std::size_t seen = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
  }
  EXPECT_GE(seen, 7u);
}
