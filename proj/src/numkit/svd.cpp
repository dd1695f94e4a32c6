#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hardshrink {

Matrix SvdFactors::reconstruct() const {
  return U * singular_values.asDiagonal() * V.transpose();
}

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kOrthTol = 1e-15;

// Orthonormal completion: the standard basis vector with the largest
// component outside span(basis.leftCols(filled)). Some e_i keeps at least
// sqrt((rows - filled) / rows) of its norm, so the choice is well conditioned.
Vector complete_basis(const Matrix& basis, Index filled) {
  const Index rows = basis.rows();
  Vector best;
  double best_norm = 0.0;
  for (Index e = 0; e < rows; ++e) {
    Vector candidate = Vector::Unit(rows, e);
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < filled; ++j)
        candidate -= basis.col(j).dot(candidate) * basis.col(j);
    const double nrm = candidate.norm();
    if (nrm > best_norm) {
      best_norm = nrm;
      best = std::move(candidate);
    }
  }
  if (best_norm < 0.5 / std::sqrt(static_cast<double>(rows)))
    throw NumericalError("svd: failed to complete orthonormal basis", 0.0);
  best /= best_norm;
  for (Index j = 0; j < filled; ++j) best -= basis.col(j).dot(best) * basis.col(j);
  return best.normalized();
}

// Requires rows >= cols.
SvdFactors jacobi_tall(const Matrix& m) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  Matrix a = m;
  Matrix v = Matrix::Identity(cols, cols);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < cols; ++i) {
      for (Index j = i + 1; j < cols; ++j) {
        const double alpha = a.col(i).squaredNorm();
        const double beta = a.col(j).squaredNorm();
        const double gamma = a.col(i).dot(a.col(j));
        if (gamma == 0.0 || std::abs(gamma) <= kOrthTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index r = 0; r < rows; ++r) {
          const double ai = a(r, i);
          const double aj = a(r, j);
          a(r, i) = c * ai - s * aj;
          a(r, j) = s * ai + c * aj;
        }
        for (Index r = 0; r < cols; ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }

  Vector norms(cols);
  for (Index j = 0; j < cols; ++j) norms[j] = a.col(j).norm();
  std::vector<Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&norms](Index x, Index y) { return norms[x] > norms[y]; });

  SvdFactors out;
  out.U.resize(rows, cols);
  out.singular_values.resize(cols);
  out.V.resize(cols, cols);
  const double sigma_max = cols > 0 ? norms[order.front()] : 0.0;
  for (Index k = 0; k < cols; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    const double sigma = norms[src];
    out.singular_values[k] = sigma;
    out.V.col(k) = v.col(src);
    if (sigma > 0.0 && sigma > 1e-13 * sigma_max && std::isnormal(sigma)) {
      Vector u = a.col(src) / sigma;
      for (int pass = 0; pass < 2; ++pass)
        for (Index j = 0; j < k; ++j) u -= out.U.col(j).dot(u) * out.U.col(j);
      out.U.col(k) = u.normalized();
    } else {
      out.U.col(k) = complete_basis(out.U, k);
    }
  }
  return out;
}

}  // namespace

SvdFactors svd(const Matrix& m) {
  if (!m.allFinite()) throw ArgumentError("svd: non-finite entries");
  if (m.rows() >= m.cols()) return jacobi_tall(m);
  SvdFactors t = jacobi_tall(m.transpose());
  std::swap(t.U, t.V);
  return t;
}

}  // namespace hardshrink
