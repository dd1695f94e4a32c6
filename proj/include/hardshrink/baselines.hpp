#pragma once

#include "hardshrink/objective.hpp"
#include "hardshrink/solvers.hpp"

namespace hardshrink {

struct LassoConfig {
  double lambda = 0.0;
  Index max_iters = 5000;
  /// Stop once the KKT residual (sup-norm of the minimal subgradient) is at
  /// most this.
  double tolerance = 1e-6;
};

struct LassoResult {
  Vector theta;
  /// f_value holds f(theta) + lambda |theta|_1.
  IterTrace trace;
  double step = 0.0;
  double kkt_residual = 0.0;
};

/// Proximal gradient (ISTA) for min f(theta) + lambda |theta|_1 with step
/// 1/L, L an upper estimate of lambda_max(A). The step is halved whenever
/// the composite objective would increase. Requires a PSD quadratic.
LassoResult ista_lasso(const QuadraticObjective& obj, const LassoConfig& cfg);

/// Sup-norm of the minimal subgradient of f + lambda |.|_1 at theta.
double lasso_kkt_residual(const Vector& theta, const Vector& gradient, double lambda);

/// scale * 2 sigma sqrt(ln p / n).
double default_lasso_lambda(double sigma, Index p, Index n, double scale = 2.0);

struct FobaConfig {
  Index target_sparsity = 1;
  /// Stop when the best forward step decreases f by less than this.
  double forward_threshold = 1e-10;
  /// Remove a coordinate when the resulting increase of f is below this
  /// times the last forward gain.
  double backward_ratio = 0.5;
  Index max_iters = 10000;
};

/// Forward-backward greedy selection. Every iteration either adds the
/// off-support coordinate with the largest gradient magnitude or removes one
/// coordinate, and then fully corrects on the new support.
SolveResult foba(const Objective& obj, const FobaConfig& cfg);

}  // namespace hardshrink
