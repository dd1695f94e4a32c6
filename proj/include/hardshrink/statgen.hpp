#pragma once

#include "hardshrink/rng.hpp"
#include "hardshrink/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hardshrink {

enum class CovarianceKind { identity, two_block, planted };

/// Covariance of the Gaussian design. Every supported kind is block diagonal
/// with unit diagonal and 2x2 blocks [[1, c], [c, 1]] on `pairs`.
struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::identity;
  Index p = 0;
  /// two_block: blocks use correlation 1 - epsilon.
  double epsilon = 0.0;
  /// planted: target condition number of the full matrix and the pair
  /// correlation rho = (kappa - 1) / (kappa + 1) that realizes it.
  double kappa_target = 50.0;
  double rho = 0.0;
  /// Correlated coordinate pairs. Filled by the factories (planted pairs are
  /// drawn by synth_linear once the signal support is known).
  std::vector<std::pair<Index, Index>> pairs;

  static CovarianceSpec identity(Index p);
  static CovarianceSpec two_block(Index p, double epsilon);
  /// Pairs are left empty; see plant_pairs().
  static CovarianceSpec planted(Index p, double kappa_target = 50.0);

  /// Correlation inside each pair.
  double pair_correlation() const;
};

std::string to_string(CovarianceKind kind);
std::optional<CovarianceKind> parse_covariance_kind(const std::string& name);

/// Dense p x p covariance.
Matrix make_covariance(const CovarianceSpec& spec);

/// Pairs s*/2 random support coordinates with s*/2 random off-support ones.
/// Throws ArgumentError when s* is odd or there are too few off-support
/// coordinates.
void plant_pairs(CovarianceSpec& spec, const IndexSet& support, RngStream& rng);

/// s_star distinct uniformly chosen coordinates set to +-1.
Vector make_sparse_signal(Index p, Index s_star, RngStream& rng);

/// ceil(f_o * s_star * ln p).
Index oversampled_size(double f_o, Index s_star, Index p);

enum class CorruptionKind { none, additive, missing };

struct ProblemInstance {
  Matrix X;
  Vector y;
  Vector theta_bar;
  CovarianceSpec cov;
  double noise_sigma = 0.0;
  Index s_star = 0;
  CorruptionKind corruption = CorruptionKind::none;
  std::optional<Matrix> sigma_w;  // additive
  double nu = 0.0;                // missing
  std::optional<Matrix> X_corrupted;
  std::optional<BoolMatrix> mask;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  Matrix sigma() const { return make_covariance(cov); }
};

/// Rows of X i.i.d. Normal(0, Sigma), y = X theta_bar + Normal(0, sigma^2).
/// For a planted covariance the pairs are drawn around supp(theta_bar).
/// Draw order: signal, pairs, X (row-major), noise.
ProblemInstance synth_linear(Index p, Index s_star, Index n, double sigma,
                             const CovarianceSpec& cov, RngStream& rng);

/// X_corrupted = X + W with rows of W i.i.d. Normal(0, Sigma_W).
ProblemInstance corrupt_additive(const ProblemInstance& inst, const Matrix& sigma_w,
                                 RngStream& rng);

/// Each entry observed independently with probability 1 - nu; missing
/// entries of X_corrupted are zero.
ProblemInstance corrupt_missing(const ProblemInstance& inst, double nu, RngStream& rng);

struct SupportError {
  Index undiscovered = 0;
  double fraction = 0.0;
};

/// Support coordinates of theta_bar missing from the s_star largest nonzero
/// entries of theta_hat.
SupportError support_error(const Vector& theta_hat, const Vector& theta_bar, Index s_star);

struct MatrixInstance {
  Matrix w_bar;
  std::vector<Matrix> sensing;
  Vector y;
  double noise_sigma = 0.0;
  Index r_star = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// W_bar = U0 V0' with entries of U0, V0 i.i.d. with variance 1/sqrt(r*), so
/// entries of W_bar have unit variance; X_i standard Gaussian;
/// y_i = <X_i, W_bar>_F + Normal(0, sigma^2).
MatrixInstance make_matrix_instance(Index p1, Index p2, Index r_star, Index n, double sigma,
                                    RngStream& rng);

/// Writes meta.json, X.csv, y.csv, theta_bar.csv and, when present,
/// X_corrupted.csv, mask.csv and Sigma_W.csv.
void write_instance(const ProblemInstance& inst, const std::filesystem::path& dir);
ProblemInstance read_instance(const std::filesystem::path& dir);

void write_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_csv(const std::filesystem::path& path);

}  // namespace hardshrink
