#pragma once

#include "hardshrink/objective.hpp"
#include "hardshrink/rng.hpp"

#include <vector>

namespace hardshrink {

/// Empirical restricted strong convexity / smoothness constants at sparsity
/// level k: the extreme eigenvalues of A(S, S) over the inspected supports.
/// Sampling can only miss supports, so alpha_hat over-estimates and L_hat
/// under-estimates the true constants unless `exhaustive` is set.
struct RscRssEstimate {
  Index k = 0;
  double alpha_hat = 0.0;
  double L_hat = 0.0;
  Index trials = 0;
  bool exhaustive = false;
  /// alpha_hat <= 0: the loss is not restricted strongly convex at this level.
  bool nonconvex = false;

  double condition_number() const { return L_hat / alpha_hat; }
};

struct RscRssOptions {
  Index trials = 200;
  /// Enumerate every support when C(p, k) is at most this.
  double exhaustive_limit = 5000.0;
  /// Blocks larger than this use Lanczos Ritz values instead of a dense
  /// eigensolve.
  Index dense_block_limit = 128;
  Index lanczos_steps = 60;
};

/// Extreme restricted eigenvalues of a quadratic at level k. `planted`, when
/// non-empty, is always inspected (padded with random coordinates to size k).
RscRssEstimate estimate_rsc_rss(const QuadraticObjective& obj, Index k, RngStream& rng,
                                const RscRssOptions& options = {},
                                const IndexSet& planted = {});

/// Estimates for several levels from nested supports: every trial draws one
/// random permutation and inspects its prefixes, so by eigenvalue
/// interlacing alpha_hat is non-increasing and L_hat non-decreasing in k.
std::vector<RscRssEstimate> estimate_rsc_rss_nested(const QuadraticObjective& obj,
                                                    const std::vector<Index>& levels,
                                                    Index trials, RngStream& rng);

/// Largest restricted curvature of a matrix objective over rank-`rank`
/// directions, by projected power iteration from `trials` random starts.
double estimate_matrix_rss(const MatrixObjective& obj, Index rank, Index trials, RngStream& rng,
                           Index power_iterations = 50);

/// Parameter-error bound for an approximate s-sparse minimizer:
///   2 sqrt(s + s*) |grad L(theta_bar)|_inf / alpha + sqrt(2 eps / alpha).
/// Throws ArgumentError when alpha <= 0 or eps < 0.
double estimation_error_bound(double grad_inf_norm, double alpha, Index s, Index s_star,
                              double epsilon);

/// Number of k-subsets of p items as a double (saturates at +inf).
double binomial(Index p, Index k);

}  // namespace hardshrink
