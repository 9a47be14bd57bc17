#pragma once

// Simple infeasible-path reference solvers used for comparison runs. They are
// plain gradient schemes on a penalized Lagrangian, not reconstructions of any
// particular published method.

#include "jobcd/gs_jobcd.hpp"

namespace jobcd {

struct BaselineConfig {
  double penalty = 10.0;                 // λ
  std::optional<double> step;            // η, default 1e-3 / max(1, L̂)
  double dual_step = 1e-2;               // ρ (ADMM only)
  std::optional<std::size_t> max_iters;
  std::optional<double> time_limit;
  std::uint64_t seed = 0;
  std::size_t trace_every = 1;
};

namespace baseline_detail {

inline double default_step(const SmoothObjective& obj, const BaselineConfig& cfg) {
  const double s = cfg.step.value_or(1e-3 / std::max(1.0, obj.lipschitz_bound()));
  require(s > 0.0 && std::isfinite(s), "baseline step size must be positive");
  return s;
}

inline void validate(const BaselineConfig& cfg) {
  require(cfg.max_iters.has_value() || cfg.time_limit.has_value(),
          "baseline: at least one of max_iters / time_limit must be set");
  require(cfg.penalty > 0.0 && cfg.dual_step > 0.0, "baseline: penalty and dual step must be positive");
}

/// Shared loop: `advance(x, eta)` proposes the next iterate, `merit(x)` guards blow-ups.
template <class Advance, class Merit, class Accept>
SolveResult run_loop(const SmoothObjective& obj, const JOrthMatrix& x0, const BaselineConfig& cfg, double eta,
                     Advance&& advance, Merit&& merit, Accept&& accept, const TraceCallback& on_trace) {
  SolveResult res;
  res.x = x0;
  Matrix x = x0.x();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  const std::size_t trace_every = std::max<std::size_t>(1, cfg.trace_every);
  const auto record = [&](std::size_t it, double step_sq) {
    IterationRecord r{it, elapsed(), obj.value(x), feasibility_residual(x, x0.sig()), step_sq};
    res.trace.push_back(r);
    if (on_trace) on_trace(r);
  };
  record(0, 0.0);
  double current = merit(x);
  std::size_t t = 0;
  while (true) {
    if (cfg.max_iters && t >= *cfg.max_iters) break;
    if (cfg.time_limit && elapsed() >= *cfg.time_limit) break;
    Matrix next = advance(x, eta);
    double m = merit(next);
    int halvings = 0;
    while ((!std::isfinite(m) || !next.allFinite() || std::abs(m) > 10.0 * std::max(1.0, std::abs(current))) &&
           halvings < 30) {
      eta *= 0.5;
      next = advance(x, eta);
      m = merit(next);
      ++halvings;
    }
    if (!next.allFinite() || !std::isfinite(m)) break;
    const double step_sq = (next - x).squaredNorm();
    x = std::move(next);
    accept(x, eta);
    current = m;
    ++t;
    if ((t % trace_every) == 0) record(t, step_sq);
  }
  if (res.trace.back().iter != t) record(t, 0.0);
  res.x = JOrthMatrix(x, x0.sig());
  res.iters = t;
  res.elapsed = elapsed();
  return res;
}

}  // namespace baseline_detail

/// Multiplier-correction gradient scheme: direction ∇f - J X Λ(X) + λ J X (X^T J X - J)
/// with the multiplier estimate Λ(X) = sym(J X^T ∇f).
inline SolveResult umcm_solve(const SmoothObjective& obj, const JOrthMatrix& x0, const BaselineConfig& cfg,
                              const TraceCallback& on_trace = {}) {
  baseline_detail::validate(cfg);
  const Signature& sig = x0.sig();
  const Vector jd = sig.diagonal();
  const double lambda = cfg.penalty;
  const auto direction = [&](const Matrix& x) {
    const Matrix g = obj.gradient(x);
    const Matrix jx = jd.asDiagonal() * x;
    Matrix mult = jd.asDiagonal() * (x.transpose() * g);
    mult = 0.5 * (mult + mult.transpose()).eval();
    Matrix gap = x.transpose() * jx;
    gap.diagonal() -= jd;
    return Matrix(g - jx * mult + lambda * jx * gap);
  };
  const auto advance = [&](const Matrix& x, double eta) { return Matrix(x - eta * direction(x)); };
  const auto merit = [&](const Matrix& x) {
    Matrix gap = x.transpose() * (jd.asDiagonal() * x);
    gap.diagonal() -= jd;
    return obj.value(x) + 0.25 * lambda * gap.squaredNorm();
  };
  return baseline_detail::run_loop(obj, x0, cfg, baseline_detail::default_step(obj, cfg), advance, merit,
                                   [](const Matrix&, double) {}, on_trace);
}

/// Splitting Y = J X with the bilinear constraint X^T Y = J:
/// linearized X-step, closed-form Y-step, dual ascent on X^T Y - J.
inline SolveResult admm_solve(const SmoothObjective& obj, const JOrthMatrix& x0, const BaselineConfig& cfg,
                              const TraceCallback& on_trace = {}) {
  baseline_detail::validate(cfg);
  const Signature& sig = x0.sig();
  const Vector jd = sig.diagonal();
  const Index n = x0.n();
  const double lambda = cfg.penalty;
  const double rho = cfg.dual_step;
  Matrix y = jd.asDiagonal() * x0.x();
  Matrix dual = Matrix::Zero(n, n);

  const auto grad_x = [&](const Matrix& x) {
    Matrix gap = x.transpose() * y;
    gap.diagonal() -= jd;
    return Matrix(obj.gradient(x) + y * dual.transpose() + lambda * y * gap.transpose() -
                  lambda * (jd.asDiagonal() * (y - jd.asDiagonal() * x)));
  };
  const auto advance = [&](const Matrix& x, double eta) { return Matrix(x - eta * grad_x(x)); };
  const auto merit = [&](const Matrix& x) {
    Matrix gap = x.transpose() * y;
    gap.diagonal() -= jd;
    return obj.value(x) + (dual.cwiseProduct(gap)).sum() + 0.5 * lambda * gap.squaredNorm() +
           0.5 * lambda * (y - jd.asDiagonal() * x).squaredNorm();
  };
  const auto accept = [&](const Matrix& x, double) {
    const Matrix jx = jd.asDiagonal() * x;
    const Matrix rhs = x * jd.asDiagonal() + jx - x * dual / lambda;
    const Matrix lhs = x * x.transpose() + Matrix::Identity(n, n);
    y = lhs.llt().solve(rhs);
    Matrix gap = x.transpose() * y;
    gap.diagonal() -= jd;
    dual += rho * gap;
  };
  return baseline_detail::run_loop(obj, x0, cfg, baseline_detail::default_step(obj, cfg), advance, merit, accept,
                                   on_trace);
}

}  // namespace jobcd
