#include "hardshrink/statgen.hpp"

#include "hardshrink/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hardshrink {

using nlohmann::json;

CovarianceSpec CovarianceSpec::identity(Index p) {
  if (p < 1) throw ArgumentError("CovarianceSpec: p must be >= 1");
  CovarianceSpec spec;
  spec.kind = CovarianceKind::identity;
  spec.p = p;
  return spec;
}

CovarianceSpec CovarianceSpec::two_block(Index p, double epsilon) {
  if (p < 2 || p % 2 != 0) throw ArgumentError("CovarianceSpec::two_block: p must be even");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw ArgumentError("CovarianceSpec::two_block: epsilon must lie in (0, 1]");
  CovarianceSpec spec;
  spec.kind = CovarianceKind::two_block;
  spec.p = p;
  spec.epsilon = epsilon;
  for (Index i = 0; i + 1 < p; i += 2) spec.pairs.emplace_back(i, i + 1);
  return spec;
}

CovarianceSpec CovarianceSpec::planted(Index p, double kappa_target) {
  if (p < 1) throw ArgumentError("CovarianceSpec::planted: p must be >= 1");
  if (!(kappa_target > 1.0)) throw ArgumentError("CovarianceSpec::planted: kappa_target must exceed 1");
  CovarianceSpec spec;
  spec.kind = CovarianceKind::planted;
  spec.p = p;
  spec.kappa_target = kappa_target;
  spec.rho = (kappa_target - 1.0) / (kappa_target + 1.0);
  return spec;
}

double CovarianceSpec::pair_correlation() const {
  switch (kind) {
    case CovarianceKind::identity: return 0.0;
    case CovarianceKind::two_block: return 1.0 - epsilon;
    case CovarianceKind::planted: return rho;
  }
  return 0.0;
}

std::string to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::identity: return "identity";
    case CovarianceKind::two_block: return "two_block";
    case CovarianceKind::planted: return "planted";
  }
  return "unknown";
}

std::optional<CovarianceKind> parse_covariance_kind(const std::string& name) {
  if (name == "identity") return CovarianceKind::identity;
  if (name == "two_block") return CovarianceKind::two_block;
  if (name == "planted") return CovarianceKind::planted;
  return std::nullopt;
}

namespace {

void validate_pairs(const CovarianceSpec& spec) {
  const double c = spec.pair_correlation();
  if (!(std::abs(c) <= 1.0)) throw ArgumentError("covariance: pair correlation outside [-1, 1]");
  std::vector<char> used(static_cast<std::size_t>(spec.p), 0);
  for (const auto& [a, b] : spec.pairs) {
    if (a < 0 || b < 0 || a >= spec.p || b >= spec.p || a == b)
      throw ArgumentError("covariance: invalid coordinate pair");
    if (used[static_cast<std::size_t>(a)] || used[static_cast<std::size_t>(b)])
      throw ArgumentError("covariance: coordinate used by two pairs");
    used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = 1;
  }
}

}  // namespace

Matrix make_covariance(const CovarianceSpec& spec) {
  if (spec.p < 1) throw ArgumentError("make_covariance: p must be >= 1");
  if (spec.kind == CovarianceKind::planted && !(spec.rho > 0.0 && spec.rho < 1.0))
    throw ArgumentError("make_covariance: planted correlation must lie in (0, 1)");
  validate_pairs(spec);
  Matrix sigma = Matrix::Identity(spec.p, spec.p);
  const double c = spec.pair_correlation();
  for (const auto& [a, b] : spec.pairs) sigma(a, b) = sigma(b, a) = c;
  return sigma;
}

void plant_pairs(CovarianceSpec& spec, const IndexSet& support, RngStream& rng) {
  const auto s_star = static_cast<Index>(support.size());
  if (s_star % 2 != 0) throw ArgumentError("plant_pairs: support size must be even");
  if (spec.p - s_star < s_star / 2)
    throw ArgumentError("plant_pairs: not enough off-support coordinates");
  std::vector<char> on(static_cast<std::size_t>(spec.p), 0);
  for (Index i : support) on[static_cast<std::size_t>(i)] = 1;
  IndexSet off;
  off.reserve(static_cast<std::size_t>(spec.p - s_star));
  for (Index i = 0; i < spec.p; ++i)
    if (!on[static_cast<std::size_t>(i)]) off.push_back(i);

  IndexSet sorted_support = support;
  std::sort(sorted_support.begin(), sorted_support.end());
  const IndexSet pick_on = rng.sample_without_replacement(s_star, s_star / 2);
  const IndexSet pick_off = rng.sample_without_replacement(static_cast<Index>(off.size()), s_star / 2);
  spec.pairs.clear();
  for (std::size_t k = 0; k < pick_on.size(); ++k)
    spec.pairs.emplace_back(sorted_support[static_cast<std::size_t>(pick_on[k])],
                            off[static_cast<std::size_t>(pick_off[k])]);
}

Vector make_sparse_signal(Index p, Index s_star, RngStream& rng) {
  if (p < 1 || s_star < 0 || s_star > p) throw ArgumentError("make_sparse_signal: need 0 <= s_star <= p");
  Vector theta = Vector::Zero(p);
  for (Index i : rng.sample_without_replacement(p, s_star)) theta[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
  return theta;
}

Index oversampled_size(double f_o, Index s_star, Index p) {
  if (!(f_o > 0.0) || s_star < 1 || p < 2) throw ArgumentError("oversampled_size: invalid arguments");
  return static_cast<Index>(std::ceil(f_o * static_cast<double>(s_star) * std::log(static_cast<double>(p))));
}

ProblemInstance synth_linear(Index p, Index s_star, Index n, double sigma,
                             const CovarianceSpec& cov, RngStream& rng) {
  if (n < 1) throw ArgumentError("synth_linear: n must be >= 1");
  if (!(sigma >= 0.0)) throw ArgumentError("synth_linear: sigma must be non-negative");
  if (cov.p != p) throw ArgumentError("synth_linear: covariance dimension mismatch");

  ProblemInstance inst;
  inst.seed = rng.seed();
  inst.stream_id = rng.stream_id();
  inst.noise_sigma = sigma;
  inst.s_star = s_star;
  inst.theta_bar = make_sparse_signal(p, s_star, rng);
  inst.cov = cov;
  if (cov.kind == CovarianceKind::planted) {
    if (!(cov.rho > 0.0 && cov.rho < 1.0))
      throw ArgumentError("synth_linear: planted correlation must lie in (0, 1)");
    plant_pairs(inst.cov, support_of(inst.theta_bar), rng);
  }
  validate_pairs(inst.cov);

  // Each 2x2 block [[1, c], [c, 1]] has Cholesky factor [[1, 0], [c, sqrt(1 - c^2)]].
  inst.X = rng.normal_matrix(n, p);
  const double c = inst.cov.pair_correlation();
  const double c_perp = std::sqrt(std::max(0.0, 1.0 - c * c));
  for (const auto& [a, b] : inst.cov.pairs)
    inst.X.col(b) = c * inst.X.col(a) + c_perp * inst.X.col(b);

  inst.y = inst.X * inst.theta_bar;
  if (sigma > 0.0) inst.y += sigma * rng.normal_vector(n);
  return inst;
}

ProblemInstance corrupt_additive(const ProblemInstance& inst, const Matrix& sigma_w, RngStream& rng) {
  const Index p = inst.p();
  if (sigma_w.rows() != p || sigma_w.cols() != p)
    throw ArgumentError("corrupt_additive: Sigma_W must be p x p");
  if (!all_finite(sigma_w)) throw ArgumentError("corrupt_additive: Sigma_W has non-finite entries");
  const double scale = std::max(1.0, sigma_w.cwiseAbs().maxCoeff());
  if ((sigma_w - sigma_w.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError("corrupt_additive: Sigma_W is not symmetric");

  ProblemInstance out = inst;
  out.corruption = CorruptionKind::additive;
  out.sigma_w = sigma_w;
  const Matrix z = rng.normal_matrix(inst.n(), p);
  const Vector diag = sigma_w.diagonal();
  const bool diagonal = (sigma_w - Matrix(diag.asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    if (diag.minCoeff() < 0.0) throw ArgumentError("corrupt_additive: Sigma_W is not PSD");
    out.X_corrupted = inst.X + z * diag.cwiseSqrt().asDiagonal();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma_w + sigma_w.transpose()));
    const Vector lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -1e-10 * scale) throw ArgumentError("corrupt_additive: Sigma_W is not PSD");
    const Matrix factor = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    out.X_corrupted = inst.X + z * factor.transpose();
  }
  return out;
}

ProblemInstance corrupt_missing(const ProblemInstance& inst, double nu, RngStream& rng) {
  if (!(nu >= 0.0 && nu < 1.0)) throw ArgumentError("corrupt_missing: nu must lie in [0, 1)");
  ProblemInstance out = inst;
  out.corruption = CorruptionKind::missing;
  out.nu = nu;
  BoolMatrix mask(inst.n(), inst.p());
  Matrix x = inst.X;
  for (Index i = 0; i < inst.n(); ++i)
    for (Index j = 0; j < inst.p(); ++j) {
      mask(i, j) = rng.bernoulli(1.0 - nu);
      if (!mask(i, j)) x(i, j) = 0.0;
    }
  out.mask = std::move(mask);
  out.X_corrupted = std::move(x);
  return out;
}

SupportError support_error(const Vector& theta_hat, const Vector& theta_bar, Index s_star) {
  if (theta_hat.size() != theta_bar.size()) throw ArgumentError("support_error: dimension mismatch");
  if (s_star < 0 || s_star > theta_hat.size()) throw ArgumentError("support_error: s_star out of range");
  SupportError err;
  if (s_star == 0) return err;
  std::vector<char> found(static_cast<std::size_t>(theta_hat.size()), 0);
  for (Index i : top_k_indices(theta_hat, s_star))
    if (theta_hat[i] != 0.0) found[static_cast<std::size_t>(i)] = 1;
  for (Index i : support_of(theta_bar))
    if (!found[static_cast<std::size_t>(i)]) ++err.undiscovered;
  err.fraction = static_cast<double>(err.undiscovered) / static_cast<double>(s_star);
  return err;
}

MatrixInstance make_matrix_instance(Index p1, Index p2, Index r_star, Index n, double sigma,
                                    RngStream& rng) {
  if (p1 < 1 || p2 < 1 || n < 1) throw ArgumentError("make_matrix_instance: sizes must be positive");
  if (r_star < 1 || r_star > std::min(p1, p2))
    throw ArgumentError("make_matrix_instance: need 1 <= r_star <= min(p1, p2)");
  if (!(sigma >= 0.0)) throw ArgumentError("make_matrix_instance: sigma must be non-negative");
  MatrixInstance inst;
  inst.seed = rng.seed();
  inst.stream_id = rng.stream_id();
  inst.noise_sigma = sigma;
  inst.r_star = r_star;
  const double sd = std::pow(static_cast<double>(r_star), -0.25);
  const Matrix u0 = sd * rng.normal_matrix(p1, r_star);
  const Matrix v0 = sd * rng.normal_matrix(p2, r_star);
  inst.w_bar = u0 * v0.transpose();
  inst.sensing.reserve(static_cast<std::size_t>(n));
  inst.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    inst.sensing.push_back(rng.normal_matrix(p1, p2));
    inst.y[i] = (inst.sensing.back().array() * inst.w_bar.array()).sum();
  }
  if (sigma > 0.0) inst.y += sigma * rng.normal_vector(n);
  return inst;
}

void write_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> values;
  Index rows = 0;
  Index cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Index count = 0;
    const char* cur = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(cur, &end);
      if (end == cur) throw std::runtime_error(path.string() + ": malformed number on row " + std::to_string(rows + 1));
      values.push_back(v);
      ++count;
      cur = end;
      if (*cur == ',') ++cur;
      else if (*cur == '\0' || *cur == '\r') break;
      else throw std::runtime_error(path.string() + ": unexpected character on row " + std::to_string(rows + 1));
    }
    if (cols >= 0 && count != cols) throw std::runtime_error(path.string() + ": ragged rows");
    cols = count;
    ++rows;
  }
  if (rows == 0) return Matrix(0, 0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

namespace {

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::additive: return "additive";
    case CorruptionKind::missing: return "missing";
  }
  return "unknown";
}

CorruptionKind parse_corruption(const std::string& name) {
  if (name == "none") return CorruptionKind::none;
  if (name == "additive") return CorruptionKind::additive;
  if (name == "missing") return CorruptionKind::missing;
  throw std::runtime_error("meta.json: unknown corruption '" + name + "'");
}

Vector as_vector(const Matrix& m, const std::string& what) {
  if (m.cols() != 1) throw std::runtime_error(what + ": expected a single column");
  return m.col(0);
}

}  // namespace

void write_instance(const ProblemInstance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json pairs = json::array();
  for (const auto& [a, b] : inst.cov.pairs) pairs.push_back({a, b});
  json meta = {
      {"n", inst.n()},
      {"p", inst.p()},
      {"s_star", inst.s_star},
      {"noise_sigma", inst.noise_sigma},
      {"seed", inst.seed},
      {"stream_id", inst.stream_id},
      {"sample_size_log", "natural"},
      {"covariance",
       {{"kind", to_string(inst.cov.kind)},
        {"p", inst.cov.p},
        {"epsilon", inst.cov.epsilon},
        {"kappa_target", inst.cov.kappa_target},
        {"rho", inst.cov.rho},
        {"pairs", pairs}}},
      {"corruption", {{"kind", to_string(inst.corruption)}, {"nu", inst.nu}}},
  };
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw std::runtime_error("cannot open " + (dir / "meta.json").string() + " for writing");
    out << meta.dump(2) << '\n';
  }
  write_csv(inst.X, dir / "X.csv");
  write_csv(inst.y, dir / "y.csv");
  write_csv(inst.theta_bar, dir / "theta_bar.csv");
  if (inst.X_corrupted) write_csv(*inst.X_corrupted, dir / "X_corrupted.csv");
  if (inst.mask) write_csv(inst.mask->cast<double>(), dir / "mask.csv");
  if (inst.sigma_w) write_csv(*inst.sigma_w, dir / "Sigma_W.csv");
}

ProblemInstance read_instance(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "meta.json").string() + ": " + e.what());
  }
  ProblemInstance inst;
  try {
    inst.s_star = meta.at("s_star").get<Index>();
    inst.noise_sigma = meta.at("noise_sigma").get<double>();
    inst.seed = meta.at("seed").get<std::uint64_t>();
    inst.stream_id = meta.at("stream_id").get<std::uint64_t>();
    const json& cov = meta.at("covariance");
    const auto kind = parse_covariance_kind(cov.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown covariance kind");
    inst.cov.kind = *kind;
    inst.cov.p = cov.at("p").get<Index>();
    inst.cov.epsilon = cov.at("epsilon").get<double>();
    inst.cov.kappa_target = cov.at("kappa_target").get<double>();
    inst.cov.rho = cov.at("rho").get<double>();
    for (const auto& pr : cov.at("pairs")) inst.cov.pairs.emplace_back(pr.at(0).get<Index>(), pr.at(1).get<Index>());
    inst.corruption = parse_corruption(meta.at("corruption").at("kind").get<std::string>());
    inst.nu = meta.at("corruption").at("nu").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "meta.json").string() + ": " + e.what());
  }
  inst.X = read_csv(dir / "X.csv");
  inst.y = as_vector(read_csv(dir / "y.csv"), "y.csv");
  inst.theta_bar = as_vector(read_csv(dir / "theta_bar.csv"), "theta_bar.csv");
  if (inst.y.size() != inst.X.rows() || inst.theta_bar.size() != inst.X.cols())
    throw std::runtime_error(dir.string() + ": inconsistent instance dimensions");
  if (std::filesystem::exists(dir / "X_corrupted.csv")) inst.X_corrupted = read_csv(dir / "X_corrupted.csv");
  if (std::filesystem::exists(dir / "mask.csv")) inst.mask = read_csv(dir / "mask.csv").cast<bool>();
  if (std::filesystem::exists(dir / "Sigma_W.csv")) inst.sigma_w = read_csv(dir / "Sigma_W.csv");
  return inst;
}

}  // namespace hardshrink
