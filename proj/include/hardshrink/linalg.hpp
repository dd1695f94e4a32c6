#pragma once

#include "hardshrink/rng.hpp"
#include "hardshrink/types.hpp"

#include <functional>

namespace hardshrink {

/// Indices of the k largest |v_i|, ordered by (|v_i| descending, i ascending).
/// Throws ArgumentError if k is negative or exceeds v.size().
IndexSet top_k_indices(const Vector& v, Index k);

/// Thin SVD: U is rows x k, V is cols x k with k = min(rows, cols); singular
/// values non-increasing.
struct SvdFactors {
  Matrix U;
  Vector singular_values;
  Matrix V;

  Matrix reconstruct() const;
};

/// One-sided Jacobi SVD. Accurate rather than fast; intended for matrices of
/// at most a few hundred rows/columns.
SvdFactors svd(const Matrix& m);

/// Solves A_SS x_S = b_S, leaving x zero off S. Falls back to a ridge of
/// 1e-12 * |trace(A_SS)| / |S| when the block is numerically singular.
Vector solve_restricted(const Matrix& a, const Vector& b, const IndexSet& support);

/// Same contract on an already extracted symmetric block.
Vector solve_symmetric(const Matrix& block, const Vector& rhs);

struct EigenExtremes {
  double min;
  double max;
};

/// Extreme eigenvalues of a symmetric matrix (dense self-adjoint solver).
EigenExtremes sym_eig_extremes(const Matrix& a);

/// Ritz-value approximation of the extreme eigenvalues of a symmetric
/// operator via Lanczos with full reorthogonalization. The returned interval
/// is contained in the true spectrum's hull.
EigenExtremes lanczos_extremes(const std::function<Vector(const Vector&)>& apply,
                               Index dim, Index steps, RngStream& rng);

/// Principal submatrix a(S, S).
Matrix principal_submatrix(const Matrix& a, const IndexSet& support);

}  // namespace hardshrink
