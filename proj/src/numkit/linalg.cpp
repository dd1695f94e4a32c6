#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

namespace hardshrink {

IndexSet support_of(const Vector& v) {
  IndexSet s;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

IndexSet top_k_indices(const Vector& v, Index k) {
  if (k < 0 || k > v.size()) {
    std::ostringstream msg;
    msg << "top_k_indices: k=" << k << " outside [0, " << v.size() << "]";
    throw ArgumentError(msg.str());
  }
  IndexSet idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto before = [&v](Index a, Index b) {
    const double ma = std::abs(v[a]);
    const double mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  const auto mid = idx.begin() + k;
  std::partial_sort(idx.begin(), mid, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Matrix principal_submatrix(const Matrix& a, const IndexSet& support) {
  const auto k = static_cast<Index>(support.size());
  Matrix block(k, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < k; ++i)
      block(i, j) = a(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
  return block;
}

namespace {

bool residual_ok(const Matrix& a, const Vector& x, const Vector& b) {
  const double bn = b.norm();
  if (!x.allFinite()) return false;
  return (a * x - b).norm() <= 1e-10 * bn || bn == 0.0;
}

// One round of iterative refinement in working precision.
template <class Factorization>
Vector solve_refined(const Factorization& fact, const Matrix& a, const Vector& b) {
  Vector x = fact.solve(b);
  Vector r = b - a * x;
  x += fact.solve(r);
  return x;
}

std::optional<Vector> try_solve(const Matrix& a, const Vector& b, double& rcond) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    Vector x = solve_refined(llt, a, b);
    if (residual_ok(a, x, b)) return x;
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  rcond = lu.rcond();
  if (rcond > 1e-14) {
    Vector x = solve_refined(lu, a, b);
    if (residual_ok(a, x, b)) return x;
  }
  return std::nullopt;
}

}  // namespace

Vector solve_symmetric(const Matrix& block, const Vector& rhs) {
  const Index k = block.rows();
  if (block.cols() != k || rhs.size() != k)
    throw ArgumentError("solve_symmetric: dimension mismatch");
  if (k == 0) return Vector(0);
  if (!block.allFinite() || !rhs.allFinite())
    throw ArgumentError("solve_symmetric: non-finite input");

  double rcond = 0.0;
  if (auto x = try_solve(block, rhs, rcond)) return *x;

  double ridge = 1e-12 * std::abs(block.trace()) / static_cast<double>(k);
  if (ridge == 0.0) ridge = 1e-12;
  Matrix ridged = block;
  ridged.diagonal().array() += ridge;
  double ridged_rcond = 0.0;
  // The ridged solution must still nearly solve the original system; an
  // inconsistent singular system is reported rather than answered.
  if (auto x = try_solve(ridged, rhs, ridged_rcond))
    if ((block * *x - rhs).norm() <= 1e-8 * rhs.norm()) return *x;

  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  std::ostringstream msg;
  msg << "restricted system of size " << k << " is singular beyond the ridge floor"
      << " (condition estimate " << cond << ")";
  throw NumericalError(msg.str(), cond);
}

Vector solve_restricted(const Matrix& a, const Vector& b, const IndexSet& support) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw ArgumentError("solve_restricted: dimension mismatch");
  for (Index i : support)
    if (i < 0 || i >= b.size()) throw ArgumentError("solve_restricted: index out of range");
  Vector rhs(static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) rhs[static_cast<Index>(i)] = b[support[i]];
  const Vector xs = solve_symmetric(principal_submatrix(a, support), rhs);
  Vector x = Vector::Zero(b.size());
  for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = xs[static_cast<Index>(i)];
  return x;
}

EigenExtremes sym_eig_extremes(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw ArgumentError("sym_eig_extremes: matrix must be square and non-empty");
  if (!a.allFinite()) throw ArgumentError("sym_eig_extremes: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError("sym_eig_extremes: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

EigenExtremes lanczos_extremes(const std::function<Vector(const Vector&)>& apply,
                               Index dim, Index steps, RngStream& rng) {
  if (dim <= 0) throw ArgumentError("lanczos_extremes: empty operator");
  steps = std::clamp<Index>(steps, 1, dim);
  Matrix q(dim, steps);
  Vector alpha(steps);
  Vector beta(steps);
  Vector v = rng.normal_vector(dim);
  v.normalize();
  Index m = 0;
  for (; m < steps; ++m) {
    q.col(m) = v;
    Vector w = apply(v);
    alpha[m] = v.dot(w);
    // Full reorthogonalization, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      const Vector coeff = q.leftCols(m + 1).transpose() * w;
      w -= q.leftCols(m + 1) * coeff;
    }
    beta[m] = w.norm();
    if (m + 1 == steps) {
      ++m;
      break;
    }
    if (beta[m] <= 1e-13 * std::max(1.0, std::abs(alpha[m]))) {
      ++m;
      break;
    }
    v = w / beta[m];
  }
  Vector diag = alpha.head(m);
  if (m == 1) return {diag[0], diag[0]};
  Vector sub = beta.head(m - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace hardshrink
