#include "hardshrink/baselines.hpp"

#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace hardshrink {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector soft_threshold(const Vector& z, double tau) {
  return z.unaryExpr([tau](double v) {
    if (v > tau) return v - tau;
    if (v < -tau) return v + tau;
    return 0.0;
  });
}

}  // namespace

double lasso_kkt_residual(const Vector& theta, const Vector& gradient, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    double r;
    if (theta[j] > 0.0) r = std::abs(gradient[j] + lambda);
    else if (theta[j] < 0.0) r = std::abs(gradient[j] - lambda);
    else r = std::max(0.0, std::abs(gradient[j]) - lambda);
    worst = std::max(worst, r);
  }
  return worst;
}

double default_lasso_lambda(double sigma, Index p, Index n, double scale) {
  if (!(sigma >= 0.0) || p < 2 || n < 1) throw ArgumentError("default_lasso_lambda: invalid arguments");
  return scale * 2.0 * sigma * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

LassoResult ista_lasso(const QuadraticObjective& obj, const LassoConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw ArgumentError("ista_lasso: lambda must be non-negative");
  if (cfg.max_iters < 1) throw ArgumentError("ista_lasso: max_iters must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw ArgumentError("ista_lasso: tolerance must be positive");
  if (obj.possibly_nonconvex() || !obj.psd_by_construction())
    throw ArgumentError("ista_lasso: objective must have a PSD Hessian (corrected losses are excluded)");

  const auto start = Clock::now();
  const Index p = obj.dimension();
  IndexSet all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), Index{0});
  RngStream rng(0x15a1ULL, static_cast<std::uint64_t>(p));
  const EigenExtremes ext = lanczos_extremes(obj.block_operator(all), p, std::min<Index>(p, 60), rng);
  if (!(ext.max > 0.0)) throw ArgumentError("ista_lasso: Hessian is zero");

  LassoResult out;
  double step = 1.0 / (1.02 * ext.max);
  Vector theta = Vector::Zero(p);
  Evaluation ev = obj.evaluate(theta);
  double composite = ev.value;
  out.trace.initial_f = composite;

  for (Index t = 1; t <= cfg.max_iters; ++t) {
    Vector next;
    Evaluation next_ev;
    double next_composite;
    while (true) {
      next = soft_threshold(theta - step * ev.gradient, step * cfg.lambda);
      next_ev = obj.evaluate(next);
      next_composite = next_ev.value + cfg.lambda * next.lpNorm<1>();
      if (next_composite <= composite || step < 1e-30) break;
      step *= 0.5;
    }
    if (!std::isfinite(next_composite))
      throw DivergenceError("ista_lasso: objective became non-finite", static_cast<std::size_t>(t));

    IterRecord rec;
    rec.t = t;
    rec.f_value = next_composite;
    rec.support = support_of(next);
    rec.wall_time = seconds_since(start);
    out.trace.records.push_back(std::move(rec));
    out.trace.iterations = t;

    theta = std::move(next);
    ev = std::move(next_ev);
    composite = next_composite;
    out.kkt_residual = lasso_kkt_residual(theta, ev.gradient, cfg.lambda);
    if (out.kkt_residual <= cfg.tolerance) {
      out.trace.stop_reason = StopReason::converged;
      break;
    }
  }
  out.theta = std::move(theta);
  out.step = step;
  out.trace.eta = step;
  return out;
}

SolveResult foba(const Objective& obj, const FobaConfig& cfg) {
  const Index p = obj.dimension();
  if (cfg.target_sparsity < 1 || cfg.target_sparsity > p)
    throw ArgumentError("foba: target sparsity must lie in [1, p]");
  if (!(cfg.forward_threshold > 0.0) || !(cfg.backward_ratio > 0.0))
    throw ArgumentError("foba: thresholds must be positive");
  if (cfg.max_iters < 1) throw ArgumentError("foba: max_iters must be >= 1");

  const auto start = Clock::now();
  SolveResult out;
  Vector theta = Vector::Zero(p);
  Evaluation ev = obj.evaluate(theta);
  out.trace.initial_f = ev.value;
  IndexSet support;
  Index t = 0;

  auto record = [&](Index changes) {
    IterRecord rec;
    rec.t = t;
    rec.f_value = ev.value;
    rec.support = support;
    rec.support_change_count = changes;
    rec.wall_time = seconds_since(start);
    out.trace.records.push_back(std::move(rec));
    out.trace.iterations = t;
  };
  auto budget_left = [&] { return t < cfg.max_iters; };

  while (budget_left() && static_cast<Index>(support.size()) < cfg.target_sparsity) {
    // Forward step.
    Vector off = ev.gradient;
    for (Index i : support) off[i] = 0.0;
    Index best = 0;
    off.cwiseAbs().maxCoeff(&best);
    IndexSet grown = support;
    grown.insert(std::upper_bound(grown.begin(), grown.end(), best), best);
    Vector candidate = obj.restricted_minimize(grown);
    Evaluation cand_ev = obj.evaluate(candidate);
    if (!std::isfinite(cand_ev.value))
      throw DivergenceError("foba: objective became non-finite", static_cast<std::size_t>(t + 1));
    const double gain = ev.value - cand_ev.value;
    if (gain < cfg.forward_threshold) {
      out.trace.stop_reason = StopReason::converged;
      break;
    }
    ++t;
    theta = std::move(candidate);
    ev = std::move(cand_ev);
    support = std::move(grown);
    record(1);

    // Backward steps.
    while (budget_left() && support.size() > 1) {
      Index weakest = -1;
      double weakest_rise = std::numeric_limits<double>::infinity();
      for (Index j : support) {
        Vector dropped = theta;
        dropped[j] = 0.0;
        const double rise = obj.value(dropped) - ev.value;
        if (rise < weakest_rise) {
          weakest_rise = rise;
          weakest = j;
        }
      }
      if (!(weakest_rise < cfg.backward_ratio * gain)) break;
      IndexSet shrunk;
      shrunk.reserve(support.size() - 1);
      for (Index j : support)
        if (j != weakest) shrunk.push_back(j);
      Vector reduced = obj.restricted_minimize(shrunk);
      Evaluation reduced_ev = obj.evaluate(reduced);
      if (!(reduced_ev.value - ev.value < cfg.backward_ratio * gain)) break;
      ++t;
      theta = std::move(reduced);
      ev = std::move(reduced_ev);
      support = std::move(shrunk);
      record(0);
    }
  }
  if (static_cast<Index>(support.size()) >= cfg.target_sparsity)
    out.trace.stop_reason = StopReason::converged;
  out.theta = std::move(theta);
  return out;
}

}  // namespace hardshrink
