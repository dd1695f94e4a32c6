#include "hardshrink/objective.hpp"

#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hardshrink {

Evaluation Objective::evaluate(const Vector& theta) const {
  return {value(theta), gradient(theta)};
}

Vector Objective::restricted_minimize(const IndexSet& support) const {
  const Index p = dimension();
  Vector x = Vector::Zero(p);
  if (support.empty()) return x;
  const Index max_iters = 10 * p;
  double step = 1.0;
  Evaluation ev = evaluate(x);
  for (Index it = 0; it < max_iters; ++it) {
    Vector g = Vector::Zero(p);
    for (Index i : support) g[i] = ev.gradient[i];
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) <= 1e-8 * (1.0 + x.norm())) break;
    step *= 2.0;
    for (int backtrack = 0; backtrack < 200; ++backtrack) {
      Vector trial = x - step * g;
      const Evaluation trial_ev = evaluate(trial);
      if (std::isfinite(trial_ev.value) && trial_ev.value <= ev.value - 0.5 * step * gnorm2) {
        x = std::move(trial);
        ev = trial_ev;
        break;
      }
      step *= 0.5;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective QuadraticObjective::dense(Matrix a, Vector b, double c, bool possibly_nonconvex) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw ArgumentError("QuadraticObjective::dense: dimension mismatch");
  if (!a.allFinite() || !b.allFinite() || !std::isfinite(c))
    throw ArgumentError("QuadraticObjective::dense: non-finite input");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError("QuadraticObjective::dense: A is not symmetric");
  QuadraticObjective q;
  q.is_dense_ = true;
  q.p_ = a.rows();
  q.a_ = std::move(a);
  q.b_ = std::move(b);
  q.c_ = c;
  q.possibly_nonconvex_ = possibly_nonconvex;
  return q;
}

QuadraticObjective QuadraticObjective::gram(GramParts parts) {
  const Index p = parts.factor.cols();
  QuadraticObjective q;
  q.is_dense_ = false;
  q.p_ = p;
  q.scale_ = parts.scale;
  if (parts.correction.size() != 0 &&
      (parts.correction.rows() != p || parts.correction.cols() != p))
    throw ArgumentError("QuadraticObjective::gram: correction must be p x p");
  if (parts.diagonal_shift.size() != 0 && parts.diagonal_shift.size() != p)
    throw ArgumentError("QuadraticObjective::gram: diagonal shift must have length p");
  if (parts.residual_target) {
    if (parts.residual_target->size() != parts.factor.rows())
      throw ArgumentError("QuadraticObjective::gram: residual target length must equal rows(F)");
    q.b_ = parts.scale * (parts.factor.transpose() * *parts.residual_target);
    q.c_ = 0.5 * parts.scale * parts.residual_target->squaredNorm();
  } else {
    if (parts.linear.size() != p)
      throw ArgumentError("QuadraticObjective::gram: linear term must have length p");
    q.b_ = std::move(parts.linear);
    q.c_ = parts.constant;
  }
  q.factor_ = std::move(parts.factor);
  q.residual_target_ = std::move(parts.residual_target);
  q.correction_ = std::move(parts.correction);
  q.diag_shift_ = std::move(parts.diagonal_shift);
  q.possibly_nonconvex_ = parts.possibly_nonconvex;
  if (p > 0 && q.factor_.rows() >= p && p <= 4096) q.gram_a_ = q.hessian();
  return q;
}

Vector QuadraticObjective::factor_times(const Vector& theta) const {
  Vector out = Vector::Zero(factor_.rows());
  for (Index j = 0; j < p_; ++j)
    if (theta[j] != 0.0) out.noalias() += theta[j] * factor_.col(j);
  return out;
}

Vector QuadraticObjective::correction_times(const Vector& theta) const {
  Vector out = Vector::Zero(p_);
  if (correction_.size() != 0)
    for (Index j = 0; j < p_; ++j)
      if (theta[j] != 0.0) out.noalias() += theta[j] * correction_.col(j);
  if (diag_shift_.size() != 0) out.array() += diag_shift_.array() * theta.array();
  return out;
}

Vector QuadraticObjective::apply_hessian(const Vector& theta) const {
  if (theta.size() != p_) throw ArgumentError("apply_hessian: dimension mismatch");
  if (is_dense_) {
    Vector out = Vector::Zero(p_);
    for (Index j = 0; j < p_; ++j)
      if (theta[j] != 0.0) out.noalias() += theta[j] * a_.col(j);
    return out;
  }
  if (gram_a_.size() != 0) {
    Vector out = Vector::Zero(p_);
    for (Index j = 0; j < p_; ++j)
      if (theta[j] != 0.0) out.noalias() += theta[j] * gram_a_.col(j);
    return out;
  }
  Vector out = scale_ * (factor_.transpose() * factor_times(theta));
  out += correction_times(theta);
  return out;
}

Evaluation QuadraticObjective::evaluate(const Vector& theta) const {
  if (theta.size() != p_) throw ArgumentError("QuadraticObjective: dimension mismatch");
  Evaluation ev;
  if (is_dense_) {
    const Vector at = apply_hessian(theta);
    ev.value = 0.5 * theta.dot(at) - b_.dot(theta) + c_;
    ev.gradient = at - b_;
    return ev;
  }
  const Vector corr = correction_times(theta);
  Vector ft = factor_times(theta);
  if (residual_target_) {
    ft -= *residual_target_;
    ev.value = 0.5 * scale_ * ft.squaredNorm() + 0.5 * theta.dot(corr);
    ev.gradient = scale_ * (factor_.transpose() * ft) + corr;
  } else {
    ev.value = 0.5 * scale_ * ft.squaredNorm() + 0.5 * theta.dot(corr) - b_.dot(theta) + c_;
    ev.gradient = scale_ * (factor_.transpose() * ft) + corr - b_;
  }
  return ev;
}

double QuadraticObjective::value(const Vector& theta) const {
  if (theta.size() != p_) throw ArgumentError("QuadraticObjective: dimension mismatch");
  if (is_dense_) return 0.5 * theta.dot(apply_hessian(theta)) - b_.dot(theta) + c_;
  const Vector corr = correction_times(theta);
  Vector ft = factor_times(theta);
  if (residual_target_) {
    ft -= *residual_target_;
    return 0.5 * scale_ * ft.squaredNorm() + 0.5 * theta.dot(corr);
  }
  return 0.5 * scale_ * ft.squaredNorm() + 0.5 * theta.dot(corr) - b_.dot(theta) + c_;
}

Vector QuadraticObjective::gradient(const Vector& theta) const { return evaluate(theta).gradient; }

Matrix QuadraticObjective::hessian_block(const IndexSet& support) const {
  for (Index i : support)
    if (i < 0 || i >= p_) throw ArgumentError("hessian_block: index out of range");
  if (is_dense_) return principal_submatrix(a_, support);
  if (gram_a_.size() != 0) return principal_submatrix(gram_a_, support);
  const auto k = static_cast<Index>(support.size());
  Matrix fs(factor_.rows(), k);
  for (Index j = 0; j < k; ++j) fs.col(j) = factor_.col(support[static_cast<std::size_t>(j)]);
  Matrix block(k, k);
  block.noalias() = scale_ * (fs.transpose() * fs);
  if (correction_.size() != 0) block += principal_submatrix(correction_, support);
  if (diag_shift_.size() != 0)
    for (Index j = 0; j < k; ++j) block(j, j) += diag_shift_[support[static_cast<std::size_t>(j)]];
  // Symmetrize away rounding in the Gram product.
  return 0.5 * (block + block.transpose());
}

std::function<Vector(const Vector&)> QuadraticObjective::block_operator(const IndexSet& support) const {
  const auto k = static_cast<Index>(support.size());
  if (is_dense_ || gram_a_.size() != 0 || correction_.size() != 0) {
    auto block = std::make_shared<const Matrix>(hessian_block(support));
    return [block](const Vector& v) -> Vector { return *block * v; };
  }
  auto fs = std::make_shared<Matrix>(factor_.rows(), k);
  auto ds = std::make_shared<Vector>(Vector::Zero(k));
  for (Index j = 0; j < k; ++j) {
    const Index src = support[static_cast<std::size_t>(j)];
    fs->col(j) = factor_.col(src);
    if (diag_shift_.size() != 0) (*ds)[j] = diag_shift_[src];
  }
  const double scale = scale_;
  return [fs, ds, scale](const Vector& v) -> Vector {
    Vector out = scale * (fs->transpose() * (*fs * v));
    out.array() += ds->array() * v.array();
    return out;
  };
}

Matrix QuadraticObjective::hessian() const {
  if (is_dense_) return a_;
  if (gram_a_.size() != 0) return gram_a_;
  Matrix a = scale_ * (factor_.transpose() * factor_);
  if (correction_.size() != 0) a += correction_;
  if (diag_shift_.size() != 0) a.diagonal() += diag_shift_;
  return 0.5 * (a + a.transpose());
}

double QuadraticObjective::hessian_diagonal(Index j) const {
  if (is_dense_) return a_(j, j);
  double d = scale_ * factor_.col(j).squaredNorm();
  if (correction_.size() != 0) d += correction_(j, j);
  if (diag_shift_.size() != 0) d += diag_shift_[j];
  return d;
}

bool QuadraticObjective::psd_by_construction() const {
  return !is_dense_ && scale_ >= 0.0 && correction_.size() == 0 &&
         (diag_shift_.size() == 0 || diag_shift_.minCoeff() >= 0.0);
}

Vector QuadraticObjective::restricted_minimize(const IndexSet& support) const {
  const auto k = static_cast<Index>(support.size());
  if (!is_dense_ && gram_a_.size() == 0 && residual_target_ && correction_.size() == 0 &&
      diag_shift_.size() == 0 && scale_ > 0.0 && k > factor_.rows()) {
    // More columns than rows: minimum-norm interpolant F_S' (F_S F_S')^-1 r.
    Matrix fs(factor_.rows(), k);
    for (Index j = 0; j < k; ++j) {
      const Index src = support[static_cast<std::size_t>(j)];
      if (src < 0 || src >= p_) throw ArgumentError("restricted_minimize: index out of range");
      fs.col(j) = factor_.col(src);
    }
    Matrix g(factor_.rows(), factor_.rows());
    g.noalias() = fs * fs.transpose();
    const Vector w = solve_symmetric(0.5 * (g + g.transpose()), *residual_target_);
    const Vector xs = fs.transpose() * w;
    Vector x = Vector::Zero(p_);
    for (Index j = 0; j < k; ++j) x[support[static_cast<std::size_t>(j)]] = xs[j];
    return x;
  }
  Vector rhs(k);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Index j = support[i];
    if (j < 0 || j >= p_) throw ArgumentError("restricted_minimize: index out of range");
    rhs[static_cast<Index>(i)] = b_[j];
  }
  const Vector xs = solve_symmetric(hessian_block(support), rhs);
  Vector x = Vector::Zero(p_);
  for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = xs[static_cast<Index>(i)];
  return x;
}

// ---------------------------------------------------------------------------
// Factories

QuadraticObjective make_least_squares(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    std::ostringstream msg;
    msg << "make_least_squares: X has " << x.rows() << " rows but y has length " << y.size();
    throw ArgumentError(msg.str());
  }
  if (x.rows() == 0) throw ArgumentError("make_least_squares: no samples");
  QuadraticObjective::GramParts parts;
  parts.factor = x;
  parts.scale = 2.0 / static_cast<double>(x.rows());
  parts.residual_target = y;
  return QuadraticObjective::gram(std::move(parts));
}

QuadraticObjective make_corrected_additive(const Matrix& x_noisy, const Vector& y,
                                           const Matrix& sigma_w) {
  const Index n = x_noisy.rows();
  const Index p = x_noisy.cols();
  if (n != y.size()) throw ArgumentError("make_corrected_additive: rows(X) != length(y)");
  if (sigma_w.rows() != p || sigma_w.cols() != p)
    throw ArgumentError("make_corrected_additive: Sigma_W must be p x p");
  if (n == 0) throw ArgumentError("make_corrected_additive: no samples");
  QuadraticObjective::GramParts parts;
  parts.factor = x_noisy;
  parts.scale = 1.0 / static_cast<double>(n);
  parts.linear = x_noisy.transpose() * y / static_cast<double>(n);
  parts.constant = 0.0;
  parts.possibly_nonconvex = true;
  const Matrix off_diag = sigma_w - Matrix(sigma_w.diagonal().asDiagonal());
  if (off_diag.cwiseAbs().maxCoeff() == 0.0) {
    if (sigma_w.diagonal().cwiseAbs().maxCoeff() != 0.0) parts.diagonal_shift = -sigma_w.diagonal();
  } else {
    parts.correction = -sigma_w;
  }
  return QuadraticObjective::gram(std::move(parts));
}

QuadraticObjective make_corrected_missing(const Matrix& x_obs, const BoolMatrix& mask,
                                          const Vector& y, double nu) {
  if (!(nu >= 0.0 && nu < 1.0)) throw ArgumentError("make_corrected_missing: nu must lie in [0, 1)");
  const Index n = x_obs.rows();
  const Index p = x_obs.cols();
  if (n != y.size()) throw ArgumentError("make_corrected_missing: rows(X) != length(y)");
  if (mask.rows() != n || mask.cols() != p)
    throw ArgumentError("make_corrected_missing: mask shape differs from X");
  if (n == 0) throw ArgumentError("make_corrected_missing: no samples");
  Matrix filled = x_obs;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i)
      if (!mask(i, j)) filled(i, j) = 0.0;

  const double keep = 1.0 - nu;
  const double nd = static_cast<double>(n);
  QuadraticObjective::GramParts parts;
  parts.scale = 1.0 / (nd * keep * keep);
  // Diagonal must end at ||x_j||^2 / (n keep): add the difference to the Gram term.
  Vector second_moment(p);
  for (Index j = 0; j < p; ++j) second_moment[j] = filled.col(j).squaredNorm() / nd;
  if (nu > 0.0) parts.diagonal_shift = second_moment * (1.0 / keep - 1.0 / (keep * keep));
  parts.linear = filled.transpose() * y / (nd * keep);
  parts.constant = 0.0;
  parts.possibly_nonconvex = true;
  parts.factor = std::move(filled);
  return QuadraticObjective::gram(std::move(parts));
}

// ---------------------------------------------------------------------------
// Matrix objectives

MatrixEvaluation MatrixObjective::evaluate(const Matrix& w) const { return {value(w), gradient(w)}; }

Matrix MatrixObjective::hessian_apply(const Matrix& direction) const {
  return gradient(direction) - gradient(Matrix::Zero(rows(), cols()));
}

MatrixLeastSquares::MatrixLeastSquares(const std::vector<Matrix>& sensing, const Vector& y) {
  if (static_cast<Index>(sensing.size()) != y.size())
    throw ArgumentError("make_matrix_least_squares: number of sensing matrices differs from length(y)");
  if (sensing.empty()) throw ArgumentError("make_matrix_least_squares: no samples");
  rows_ = sensing.front().rows();
  cols_ = sensing.front().cols();
  flat_.resize(static_cast<Index>(sensing.size()), rows_ * cols_);
  for (std::size_t i = 0; i < sensing.size(); ++i) {
    const Matrix& xi = sensing[i];
    if (xi.rows() != rows_ || xi.cols() != cols_)
      throw ArgumentError("make_matrix_least_squares: sensing matrices differ in shape");
    flat_.row(static_cast<Index>(i)) = Eigen::Map<const Vector>(xi.data(), xi.size()).transpose();
  }
  y_ = y;
}

Vector MatrixLeastSquares::measure(const Matrix& w) const {
  if (w.rows() != rows_ || w.cols() != cols_) throw ArgumentError("MatrixLeastSquares: shape mismatch");
  return flat_ * Eigen::Map<const Vector>(w.data(), w.size());
}

double MatrixLeastSquares::value(const Matrix& w) const {
  return (measure(w) - y_).squaredNorm() / static_cast<double>(y_.size());
}

MatrixEvaluation MatrixLeastSquares::evaluate(const Matrix& w) const {
  const Vector r = measure(w) - y_;
  const double nd = static_cast<double>(y_.size());
  const Vector g = (2.0 / nd) * (flat_.transpose() * r);
  return {r.squaredNorm() / nd, Eigen::Map<const Matrix>(g.data(), rows_, cols_)};
}

Matrix MatrixLeastSquares::gradient(const Matrix& w) const { return evaluate(w).gradient; }

Matrix MatrixLeastSquares::hessian_apply(const Matrix& direction) const {
  const Vector g = (2.0 / static_cast<double>(y_.size())) * (flat_.transpose() * measure(direction));
  return Eigen::Map<const Matrix>(g.data(), rows_, cols_);
}

MatrixLeastSquares make_matrix_least_squares(const std::vector<Matrix>& sensing, const Vector& y) {
  return MatrixLeastSquares(sensing, y);
}

}  // namespace hardshrink
