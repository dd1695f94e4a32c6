#pragma once

#include "hardshrink/types.hpp"

namespace hardshrink {

/// Result of a sparse projection. `support` is ascending and lists exactly the
/// retained coordinates; `values` is zero everywhere else.
struct SparseProjection {
  Vector values;
  IndexSet support;
  Index s = 0;
};

/// Parameters of the partial hard-thresholding operator: at most `s`
/// nonzeros, of which at most `l` may lie outside `current_support`.
struct PartialProjectionSpec {
  Index s = 0;
  Index l = 0;
  IndexSet current_support;
};

/// Euclidean projection onto s-sparse vectors: keeps the s largest
/// magnitudes (ties to the lower index). Entries of z that are exactly zero
/// are never reported as support, so the support can be smaller than s.
SparseProjection hard_threshold(const Vector& z, Index s);

/// Euclidean projection onto { v : |supp(v)| <= s, |supp(v) \ S| <= l }.
/// Keeps the entries of S outside the `l` smallest (bot set) and hard
/// thresholds the rest, which is what the optimal choice of the number of
/// newly admitted coordinates reduces to.
SparseProjection partial_hard_threshold(const Vector& z, const PartialProjectionSpec& spec);

/// Best rank-r approximation in Frobenius norm (truncated SVD). On ties at
/// the cut the first r singular triplets in SVD order are kept.
Matrix rank_project(const Matrix& w, Index r);

/// Number of singular values above 1e-10 * sigma_1.
Index numerical_rank(const Matrix& w);

}  // namespace hardshrink
