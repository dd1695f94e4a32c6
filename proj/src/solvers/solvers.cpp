#include "hardshrink/solvers.hpp"

#include "hardshrink/diagnostics.hpp"
#include "hardshrink/linalg.hpp"
#include "hardshrink/projections.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace hardshrink {

std::string to_string(StopRule rule) {
  switch (rule) {
    case StopRule::f_decrease: return "f_decrease";
    case StopRule::grad_support_norm: return "grad_support_norm";
    case StopRule::iterate_change: return "iterate_change";
  }
  return "unknown";
}

std::string to_string(StopReason reason) {
  return reason == StopReason::converged ? "converged" : "max_iters";
}

namespace {

using Clock = std::chrono::steady_clock;

void validate_common(const SolverConfig& cfg, Index dim, const char* who) {
  std::ostringstream msg;
  msg << who << ": ";
  if (cfg.s < 1) msg << "s must be >= 1";
  else if (cfg.s > dim) msg << "s=" << cfg.s << " exceeds dimension " << dim;
  else if (cfg.eta && !(*cfg.eta > 0.0)) msg << "eta must be positive";
  else if (!(cfg.epsilon >= 0.0)) msg << "epsilon must be non-negative";
  else if (cfg.max_iters < 1) msg << "max_iters must be >= 1";
  else if (cfg.patience < 1) msg << "patience must be >= 1";
  else if (cfg.warm_start && cfg.warm_start->size() != dim) msg << "warm start has wrong dimension";
  else return;
  throw ArgumentError(msg.str());
}

Index count_new(const IndexSet& next, const IndexSet& prev) {
  // Both ascending.
  Index added = 0;
  auto it = prev.begin();
  for (Index i : next) {
    while (it != prev.end() && *it < i) ++it;
    if (it == prev.end() || *it != i) ++added;
  }
  return added;
}

/// Shared stopping-rule bookkeeping.
class StopMonitor {
 public:
  explicit StopMonitor(const SolverConfig& cfg) : cfg_(cfg) {}

  bool should_stop(double f_prev, double f_new, double grad_support_norm, double step_norm,
                   double iterate_norm) {
    switch (cfg_.stop_rule) {
      case StopRule::f_decrease:
        if (std::abs(f_prev - f_new) <= cfg_.epsilon * (1.0 + std::abs(f_new))) ++small_steps_;
        else small_steps_ = 0;
        return small_steps_ >= cfg_.patience;
      case StopRule::grad_support_norm:
        return grad_support_norm <= cfg_.epsilon * (1.0 + iterate_norm);
      case StopRule::iterate_change:
        return step_norm <= cfg_.epsilon * (1.0 + iterate_norm);
    }
    return false;
  }

 private:
  const SolverConfig& cfg_;
  Index small_steps_ = 0;
};

double restricted_norm(const Vector& g, const IndexSet& support) {
  double acc = 0.0;
  for (Index i : support) acc += g[i] * g[i];
  return std::sqrt(acc);
}

void check_finite(double f, Index t, const char* who) {
  if (!std::isfinite(f)) {
    std::ostringstream msg;
    msg << who << ": objective became non-finite at iteration " << t
        << " (step size too large?)";
    throw DivergenceError(msg.str(), static_cast<std::size_t>(t));
  }
}

/// Drives a vector solver whose per-iteration map is `step(theta, eval)`.
template <class Step>
SolveResult run_vector_loop(const Objective& obj, const SolverConfig& cfg, double eta,
                            const char* who, Step&& step) {
  const auto start = Clock::now();
  SolveResult out;
  out.trace.eta = eta;
  Vector theta = cfg.warm_start ? *cfg.warm_start : Vector::Zero(obj.dimension());
  Evaluation ev = obj.evaluate(theta);
  check_finite(ev.value, 0, who);
  out.trace.initial_f = ev.value;
  IndexSet support = support_of(theta);
  StopMonitor monitor(cfg);

  for (Index t = 1; t <= cfg.max_iters; ++t) {
    Vector next = step(theta, ev, support);
    Evaluation next_ev = obj.evaluate(next);
    check_finite(next_ev.value, t, who);
    IndexSet next_support = support_of(next);

    IterRecord rec;
    rec.t = t;
    rec.f_value = next_ev.value;
    rec.support_change_count = count_new(next_support, support);
    rec.support = next_support;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    out.trace.records.push_back(std::move(rec));
    out.trace.iterations = t;

    const bool stop = monitor.should_stop(ev.value, next_ev.value,
                                          restricted_norm(next_ev.gradient, next_support),
                                          (next - theta).norm(), next.norm());
    theta = std::move(next);
    ev = std::move(next_ev);
    support = std::move(next_support);
    if (stop) {
      out.trace.stop_reason = StopReason::converged;
      break;
    }
  }
  out.theta = std::move(theta);
  return out;
}

double resolve_eta(const Objective& obj, const SolverConfig& cfg, StepFamily family) {
  if (cfg.eta) return *cfg.eta;
  return default_step_size(obj, cfg.s, family, cfg.s_star_hint, cfg.step_trials, cfg.step_seed);
}

}  // namespace

SolveResult iht_solve(const Objective& obj, const SolverConfig& cfg) {
  validate_common(cfg, obj.dimension(), "iht_solve");
  const double eta = resolve_eta(obj, cfg, StepFamily::iht);
  return run_vector_loop(obj, cfg, eta, "iht_solve",
                         [&](const Vector& theta, const Evaluation& ev, const IndexSet&) {
                           const Vector z = theta - eta * ev.gradient;
                           SparseProjection proj = hard_threshold(z, cfg.s);
                           if (cfg.fully_corrective) return obj.restricted_minimize(proj.support);
                           return std::move(proj.values);
                         });
}

SolveResult two_stage_solve(const Objective& obj, const SolverConfig& cfg) {
  validate_common(cfg, obj.dimension(), "two_stage_solve");
  if (cfg.l < 1) throw ArgumentError("two_stage_solve: expansion level l must be >= 1");
  const Index p = obj.dimension();
  return run_vector_loop(
      obj, cfg, 0.0, "two_stage_solve",
      [&](const Vector&, const Evaluation& ev, const IndexSet& support) {
        // Off-support gradient, with the current support masked out.
        Vector off = ev.gradient;
        for (Index i : support) off[i] = 0.0;
        const Index room = p - static_cast<Index>(support.size());
        const IndexSet added = top_k_indices(off, std::min(cfg.l, room));
        IndexSet expanded = support;
        for (Index i : added)
          if (!std::binary_search(support.begin(), support.end(), i)) expanded.push_back(i);
        std::sort(expanded.begin(), expanded.end());
        const Vector beta = obj.restricted_minimize(expanded);
        const SparseProjection pruned = hard_threshold(beta, cfg.s);
        return obj.restricted_minimize(pruned.support);
      });
}

SolveResult pht_solve(const Objective& obj, const SolverConfig& cfg) {
  validate_common(cfg, obj.dimension(), "pht_solve");
  if (cfg.l < 1 || cfg.l > cfg.s) throw ArgumentError("pht_solve: require 1 <= l <= s");
  const double eta = resolve_eta(obj, cfg, StepFamily::pht);
  return run_vector_loop(obj, cfg, eta, "pht_solve",
                         [&](const Vector& theta, const Evaluation& ev, const IndexSet& support) {
                           const Vector z = theta - eta * ev.gradient;
                           const SparseProjection v =
                               partial_hard_threshold(z, {cfg.s, cfg.l, support});
                           return obj.restricted_minimize(v.support);
                         });
}

MatrixSolveResult matrix_iht_solve(const MatrixObjective& obj, const SolverConfig& cfg) {
  const Index max_rank = std::min(obj.rows(), obj.cols());
  validate_common(cfg, max_rank, "matrix_iht_solve");
  const double eta = cfg.eta ? *cfg.eta : default_matrix_step_size(obj, cfg.s, cfg.s_star_hint, cfg.step_seed);

  const auto start = Clock::now();
  MatrixSolveResult out;
  out.trace.eta = eta;
  Matrix w = Matrix::Zero(obj.rows(), obj.cols());
  MatrixEvaluation ev = obj.evaluate(w);
  check_finite(ev.value, 0, "matrix_iht_solve");
  out.trace.initial_f = ev.value;
  StopMonitor monitor(cfg);

  for (Index t = 1; t <= cfg.max_iters; ++t) {
    const Matrix z = w - eta * ev.gradient;
    Matrix next;
    Matrix u, v;
    Index rank = 0;
    if (cfg.s == max_rank) {
      next = z;
      rank = numerical_rank(z);
    } else {
      const SvdFactors f = svd(z);
      u = f.U.leftCols(cfg.s);
      v = f.V.leftCols(cfg.s);
      next = u * f.singular_values.head(cfg.s).asDiagonal() * v.transpose();
      for (Index i = 0; i < cfg.s; ++i)
        if (f.singular_values[i] > 1e-10 * f.singular_values[0]) ++rank;
    }
    MatrixEvaluation next_ev = obj.evaluate(next);
    check_finite(next_ev.value, t, "matrix_iht_solve");

    IterRecord rec;
    rec.t = t;
    rec.f_value = next_ev.value;
    rec.rank = rank;
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    out.trace.records.push_back(std::move(rec));
    out.trace.iterations = t;

    // Gradient projected onto the tangent space of the rank-s set at `next`.
    double tangent_norm = 0.0;
    if (cfg.stop_rule == StopRule::grad_support_norm) {
      if (cfg.s == max_rank) {
        tangent_norm = next_ev.gradient.norm();
      } else {
        const Matrix& g = next_ev.gradient;
        const Matrix ug = u.transpose() * g;
        const Matrix gv = g * v;
        tangent_norm = (u * ug + gv * v.transpose() - u * (ug * v) * v.transpose()).norm();
      }
    }
    const bool stop = monitor.should_stop(ev.value, next_ev.value, tangent_norm,
                                          (next - w).norm(), next.norm());
    w = std::move(next);
    ev = std::move(next_ev);
    if (stop) {
      out.trace.stop_reason = StopReason::converged;
      break;
    }
  }
  out.w = std::move(w);
  return out;
}

double restricted_smoothness(const Objective& obj, Index level, Index trials, std::uint64_t seed) {
  const auto* quad = dynamic_cast<const QuadraticObjective*>(&obj);
  if (quad == nullptr)
    throw ArgumentError("restricted_smoothness: only quadratic objectives are supported; pass eta explicitly");
  RngStream rng(seed, static_cast<std::uint64_t>(level));
  RscRssOptions options;
  options.trials = trials;
  const RscRssEstimate est = estimate_rsc_rss(*quad, level, rng, options);
  if (!(est.L_hat > 0.0)) throw ArgumentError("restricted_smoothness: non-positive curvature estimate");
  return est.L_hat;
}

double step_from_smoothness(double smoothness, StepFamily family) {
  if (!(smoothness > 0.0)) throw ArgumentError("step_from_smoothness: smoothness must be positive");
  switch (family) {
    case StepFamily::iht: return 2.0 / (3.0 * smoothness);
    case StepFamily::grades: return 1.0 / smoothness;
    case StepFamily::pht: return 1.0 / (2.0 * smoothness);
  }
  return 0.0;
}

double default_step_size(const Objective& obj, Index s, StepFamily family,
                         std::optional<Index> s_star_hint, Index trials, std::uint64_t seed) {
  const Index p = obj.dimension();
  const Index level = std::min(2 * s + s_star_hint.value_or(s), p);
  return step_from_smoothness(restricted_smoothness(obj, level, trials, seed), family);
}

double default_matrix_step_size(const MatrixObjective& obj, Index s, std::optional<Index> rank_hint,
                                std::uint64_t seed) {
  const Index max_rank = std::min(obj.rows(), obj.cols());
  const Index level = std::min(2 * s + rank_hint.value_or(s), max_rank);
  RngStream rng(seed, static_cast<std::uint64_t>(level));
  const double smoothness = estimate_matrix_rss(obj, level, 10, rng);
  return step_from_smoothness(smoothness, StepFamily::iht);
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "iht") return Algorithm::iht;
  if (name == "htp") return Algorithm::htp;
  if (name == "grades") return Algorithm::grades;
  if (name == "two_stage") return Algorithm::two_stage;
  if (name == "cosamp") return Algorithm::cosamp;
  if (name == "sp") return Algorithm::sp;
  if (name == "pht") return Algorithm::pht;
  if (name == "ompr") return Algorithm::ompr;
  return std::nullopt;
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::iht: return "iht";
    case Algorithm::htp: return "htp";
    case Algorithm::grades: return "grades";
    case Algorithm::two_stage: return "two_stage";
    case Algorithm::cosamp: return "cosamp";
    case Algorithm::sp: return "sp";
    case Algorithm::pht: return "pht";
    case Algorithm::ompr: return "ompr";
  }
  return "unknown";
}

SolverConfig apply_preset(Algorithm algo, SolverConfig cfg) {
  switch (algo) {
    case Algorithm::iht:
    case Algorithm::grades: cfg.fully_corrective = false; break;
    case Algorithm::htp: cfg.fully_corrective = true; break;
    case Algorithm::cosamp: cfg.l = 2 * cfg.s; break;
    case Algorithm::sp: cfg.l = cfg.s; break;
    case Algorithm::ompr: cfg.l = 1; break;
    case Algorithm::two_stage:
    case Algorithm::pht: break;
  }
  return cfg;
}

StepFamily step_family(Algorithm algo) {
  switch (algo) {
    case Algorithm::grades: return StepFamily::grades;
    case Algorithm::pht:
    case Algorithm::ompr: return StepFamily::pht;
    default: return StepFamily::iht;
  }
}

SolveResult run_algorithm(const Objective& obj, Algorithm algo, SolverConfig cfg) {
  cfg = apply_preset(algo, std::move(cfg));
  switch (algo) {
    case Algorithm::iht:
    case Algorithm::htp: return iht_solve(obj, cfg);
    case Algorithm::grades:
      if (!cfg.eta)
        cfg.eta = default_step_size(obj, cfg.s, StepFamily::grades, cfg.s_star_hint, cfg.step_trials,
                                    cfg.step_seed);
      return iht_solve(obj, cfg);
    case Algorithm::two_stage:
    case Algorithm::cosamp:
    case Algorithm::sp: return two_stage_solve(obj, cfg);
    case Algorithm::pht:
    case Algorithm::ompr: return pht_solve(obj, cfg);
  }
  throw ArgumentError("run_algorithm: unknown algorithm");
}

}  // namespace hardshrink
