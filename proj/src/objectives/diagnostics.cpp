#include "hardshrink/diagnostics.hpp"

#include "hardshrink/linalg.hpp"
#include "hardshrink/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hardshrink {

double binomial(Index p, Index k) {
  if (k < 0 || k > p) return 0.0;
  k = std::min(k, p - k);
  double out = 1.0;
  for (Index i = 1; i <= k; ++i) {
    out = out * static_cast<double>(p - k + i) / static_cast<double>(i);
    if (!std::isfinite(out)) return std::numeric_limits<double>::infinity();
  }
  return std::round(out);
}

namespace {

EigenExtremes block_extremes(const QuadraticObjective& obj, const IndexSet& support,
                             const RscRssOptions& options, RngStream& rng, bool force_dense) {
  const auto k = static_cast<Index>(support.size());
  if (force_dense || k <= options.dense_block_limit)
    return sym_eig_extremes(obj.hessian_block(support));
  return lanczos_extremes(obj.block_operator(support), k, options.lanczos_steps, rng);
}

void validate_level(const QuadraticObjective& obj, Index k) {
  if (k < 1 || k > obj.dimension()) {
    std::ostringstream msg;
    msg << "estimate_rsc_rss: level k=" << k << " outside [1, " << obj.dimension() << "]";
    throw ArgumentError(msg.str());
  }
}

}  // namespace

RscRssEstimate estimate_rsc_rss(const QuadraticObjective& obj, Index k, RngStream& rng,
                                const RscRssOptions& options, const IndexSet& planted) {
  validate_level(obj, k);
  if (options.trials < 1) throw ArgumentError("estimate_rsc_rss: trials must be >= 1");
  const Index p = obj.dimension();

  RscRssEstimate est;
  est.k = k;
  est.alpha_hat = std::numeric_limits<double>::infinity();
  est.L_hat = -std::numeric_limits<double>::infinity();
  auto absorb = [&est](const EigenExtremes& e) {
    est.alpha_hat = std::min(est.alpha_hat, e.min);
    est.L_hat = std::max(est.L_hat, e.max);
    ++est.trials;
  };

  if (binomial(p, k) <= options.exhaustive_limit) {
    est.exhaustive = true;
    IndexSet support(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) support[static_cast<std::size_t>(i)] = i;
    while (true) {
      absorb(block_extremes(obj, support, options, rng, true));
      // Next combination in lexicographic order.
      Index i = k - 1;
      while (i >= 0 && support[static_cast<std::size_t>(i)] == p - k + i) --i;
      if (i < 0) break;
      ++support[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j)
        support[static_cast<std::size_t>(j)] = support[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    if (!planted.empty()) {
      std::vector<char> used(static_cast<std::size_t>(p), 0);
      IndexSet support;
      for (Index i : planted) {
        if (i < 0 || i >= p) throw ArgumentError("estimate_rsc_rss: planted index out of range");
        if (static_cast<Index>(support.size()) == k) break;
        if (!used[static_cast<std::size_t>(i)]) support.push_back(i);
        used[static_cast<std::size_t>(i)] = 1;
      }
      for (Index i : rng.permutation(p)) {
        if (static_cast<Index>(support.size()) == k) break;
        if (!used[static_cast<std::size_t>(i)]) support.push_back(i);
      }
      std::sort(support.begin(), support.end());
      absorb(block_extremes(obj, support, options, rng, false));
    }
    for (Index t = 0; t < options.trials; ++t) {
      IndexSet support = rng.sample_without_replacement(p, k);
      std::sort(support.begin(), support.end());
      absorb(block_extremes(obj, support, options, rng, false));
    }
  }
  est.nonconvex = est.alpha_hat <= 0.0;
  return est;
}

std::vector<RscRssEstimate> estimate_rsc_rss_nested(const QuadraticObjective& obj,
                                                    const std::vector<Index>& levels,
                                                    Index trials, RngStream& rng) {
  if (trials < 1) throw ArgumentError("estimate_rsc_rss_nested: trials must be >= 1");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    validate_level(obj, levels[i]);
    if (i > 0 && levels[i] <= levels[i - 1])
      throw ArgumentError("estimate_rsc_rss_nested: levels must be strictly increasing");
  }
  std::vector<RscRssEstimate> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out[i].k = levels[i];
    out[i].alpha_hat = std::numeric_limits<double>::infinity();
    out[i].L_hat = -std::numeric_limits<double>::infinity();
  }
  for (Index t = 0; t < trials; ++t) {
    const IndexSet perm = rng.permutation(obj.dimension());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      IndexSet support(perm.begin(), perm.begin() + levels[i]);
      const EigenExtremes e = sym_eig_extremes(obj.hessian_block(support));
      out[i].alpha_hat = std::min(out[i].alpha_hat, e.min);
      out[i].L_hat = std::max(out[i].L_hat, e.max);
      ++out[i].trials;
    }
  }
  for (auto& est : out) est.nonconvex = est.alpha_hat <= 0.0;
  return out;
}

double estimate_matrix_rss(const MatrixObjective& obj, Index rank, Index trials, RngStream& rng,
                           Index power_iterations) {
  const Index max_rank = std::min(obj.rows(), obj.cols());
  if (rank < 1 || rank > max_rank) throw ArgumentError("estimate_matrix_rss: rank out of range");
  if (trials < 1) throw ArgumentError("estimate_matrix_rss: trials must be >= 1");
  double best = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < trials; ++t) {
    Matrix w = rank_project(rng.normal_matrix(obj.rows(), obj.cols()), rank);
    w /= w.norm();
    for (Index it = 0; it < power_iterations; ++it) {
      const Matrix h = obj.hessian_apply(w);
      best = std::max(best, (w.array() * h.array()).sum());
      Matrix next = rank_project(h, rank);
      const double nrm = next.norm();
      if (nrm == 0.0) break;
      w = next / nrm;
    }
  }
  return best;
}

double estimation_error_bound(double grad_inf_norm, double alpha, Index s, Index s_star,
                              double epsilon) {
  if (!(alpha > 0.0)) throw ArgumentError("estimation_error_bound: alpha must be positive");
  if (!(epsilon >= 0.0)) throw ArgumentError("estimation_error_bound: epsilon must be non-negative");
  if (s < 0 || s_star < 0) throw ArgumentError("estimation_error_bound: negative sparsity");
  const double level = static_cast<double>(s + s_star);
  return 2.0 * std::sqrt(level) * grad_inf_norm / alpha + std::sqrt(2.0 * epsilon / alpha);
}

}  // namespace hardshrink
