#pragma once

#include "hardshrink/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace hardshrink {

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

struct MatrixEvaluation {
  double value = 0.0;
  Matrix gradient;
};

/// Differentiable objective over R^p.
///
/// Implementations must be immutable after construction: all methods are
/// const and may be called concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dimension() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;

  /// Value and gradient together; override when they share work.
  virtual Evaluation evaluate(const Vector& theta) const;

  /// arg min f(theta) subject to supp(theta) within `support`.
  ///
  /// The default runs projected gradient descent on the fixed support with
  /// Armijo backtracking until the restricted gradient norm drops to
  /// 1e-8 * (1 + |theta|), for at most 10 * p iterations.
  virtual Vector restricted_minimize(const IndexSet& support) const;
};

/// f(theta) = 1/2 theta' A theta - b' theta + c with A symmetric, not
/// necessarily positive semidefinite.
///
/// A is held either densely or in Gram form
///   A = scale * F'F + C + diag(d),
/// which keeps least-squares objectives at O(n p) memory. In Gram form with
/// a residual target r, b = scale * F'r and c = scale/2 * |r|^2, and the value
/// is evaluated as scale/2 * |F theta - r|^2 (+ correction terms) to avoid
/// cancellation near the minimum.
class QuadraticObjective final : public Objective {
 public:
  struct GramParts {
    Matrix factor;             // F, n x p
    double scale = 1.0;
    std::optional<Vector> residual_target;  // r; when set, linear/constant are derived
    Matrix correction;         // C, p x p or empty
    Vector diagonal_shift;     // d, length p or empty
    Vector linear;             // b, used when residual_target is unset
    double constant = 0.0;
    bool possibly_nonconvex = false;
  };

  static QuadraticObjective dense(Matrix a, Vector b, double c, bool possibly_nonconvex = false);
  static QuadraticObjective gram(GramParts parts);

  Index dimension() const override { return p_; }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  Evaluation evaluate(const Vector& theta) const override;

  /// Exact: solves A_SS x_S = b_S (ridge fallback if singular).
  Vector restricted_minimize(const IndexSet& support) const override;

  /// A * theta. Work scales with nnz(theta).
  Vector apply_hessian(const Vector& theta) const;

  /// A(S, S).
  Matrix hessian_block(const IndexSet& support) const;

  /// v -> A(S, S) v without forming the block.
  std::function<Vector(const Vector&)> block_operator(const IndexSet& support) const;

  /// Dense A; O(p^2) memory.
  Matrix hessian() const;

  double hessian_diagonal(Index j) const;
  const Vector& linear_term() const { return b_; }
  double constant_term() const { return c_; }

  /// Set for corrected losses, whose Hessian may be indefinite.
  bool possibly_nonconvex() const { return possibly_nonconvex_; }

  /// True when A is PSD by construction (pure Gram form, nonnegative scale).
  bool psd_by_construction() const;

 private:
  QuadraticObjective() = default;

  // Computes F * theta using only the nonzero entries of theta.
  Vector factor_times(const Vector& theta) const;
  // (C + diag(d)) * theta, sparse in theta.
  Vector correction_times(const Vector& theta) const;

  bool is_dense_ = true;
  Index p_ = 0;
  Matrix a_;  // dense form
  Matrix gram_a_;  // gram form with rows(F) >= p: cached F'F scale + C + diag(d)
  Matrix factor_;
  double scale_ = 1.0;
  std::optional<Vector> residual_target_;
  Matrix correction_;
  Vector diag_shift_;
  Vector b_;
  double c_ = 0.0;
  bool possibly_nonconvex_ = false;
};

/// f(theta) = (1/n) |y - X theta|^2, i.e. A = (2/n) X'X, b = (2/n) X'y,
/// c = |y|^2 / n.
QuadraticObjective make_least_squares(const Matrix& x, const Vector& y);

/// Corrected loss for additive feature noise with known covariance Sigma_W:
/// A = X~'X~/n - Sigma_W, b = X~'y/n, c = 0. Flagged possibly nonconvex.
QuadraticObjective make_corrected_additive(const Matrix& x_noisy, const Vector& y,
                                           const Matrix& sigma_w);

/// Corrected loss for entries missing independently with probability nu.
/// `mask(i, j)` is true where x_obs(i, j) was observed; unobserved entries are
/// treated as zero. Off-diagonal second moments are rescaled by 1/(1-nu)^2,
/// diagonal ones by 1/(1-nu); b = X~'y / (n (1-nu)).
QuadraticObjective make_corrected_missing(const Matrix& x_obs,
                                          const BoolMatrix& mask,
                                          const Vector& y, double nu);

/// Objective over p1 x p2 matrices.
class MatrixObjective {
 public:
  virtual ~MatrixObjective() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual double value(const Matrix& w) const = 0;
  virtual Matrix gradient(const Matrix& w) const = 0;

  virtual MatrixEvaluation evaluate(const Matrix& w) const;

  /// Hessian applied to a direction. The default differences gradients at w
  /// and 0, which is exact for quadratics.
  virtual Matrix hessian_apply(const Matrix& direction) const;
};

/// f(W) = (1/n) sum_i (<X_i, W>_F - y_i)^2.
class MatrixLeastSquares final : public MatrixObjective {
 public:
  MatrixLeastSquares(const std::vector<Matrix>& sensing, const Vector& y);

  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  double value(const Matrix& w) const override;
  Matrix gradient(const Matrix& w) const override;
  MatrixEvaluation evaluate(const Matrix& w) const override;
  Matrix hessian_apply(const Matrix& direction) const override;

  /// <X_i, W>_F for every i.
  Vector measure(const Matrix& w) const;
  Index samples() const { return y_.size(); }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Matrix flat_;  // n x (rows*cols); row i is X_i flattened column-major
  Vector y_;
};

MatrixLeastSquares make_matrix_least_squares(const std::vector<Matrix>& sensing, const Vector& y);

}  // namespace hardshrink
