#pragma once

// Gauss-Seidel block coordinate descent: one uniformly sampled 2x2 block per
// iteration, solved globally through its majorizer.

#include "jobcd/objectives.hpp"
#include "jobcd/subproblem.hpp"

#include <chrono>
#include <deque>
#include <functional>
#include <limits>
#include <optional>

namespace jobcd {

struct IterationRecord {
  std::size_t iter = 0;
  double elapsed = 0.0;    // seconds
  double objective = 0.0;
  double residual = 0.0;
  double v_dist = 0.0;     // ‖V̄ - I₂‖²_F of the step (summed over blocks for Jacobi steps)
  double estimator_error = std::numeric_limits<double>::quiet_NaN();  // ‖G̃ - ∇f‖_F (VR runs only)
};

using TraceCallback = std::function<void(const IterationRecord&)>;

struct GsConfig {
  QMode q_mode = QMode::Exact;
  std::optional<double> theta;              // default: 1e-3 (Exact) or 1e-3 (1 + ς) (Scalar)
  std::optional<double> varsigma;           // Scalar mode; default: objective's Lipschitz bound
  std::optional<std::size_t> max_iters;
  std::optional<double> time_limit;         // seconds
  std::uint64_t seed = 0;
  std::size_t trace_every = 1;
  std::optional<double> tolerance;          // moving-average ‖V̄ - I‖² stop over C(n,2) steps
};

/// One block step as seen by observers.
struct GsStepInfo {
  std::size_t iter = 0;
  BlockPair block;
  SubproblemSolution solution;
  double f_before = 0.0;
  double f_after = 0.0;
  double v_dist = 0.0;
  double x_norm_sq = 0.0;   // ‖X^t‖²_F
  double dx_norm_sq = 0.0;  // ‖X^{t+1} - X^t‖²_F
  const JOrthMatrix* x_after = nullptr;
};

using GsStepCallback = std::function<void(const GsStepInfo&)>;

enum class StopReason { MaxIters, TimeLimit, Tolerance, NonFinite };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIters: return "max_iters";
    case StopReason::TimeLimit: return "time_limit";
    case StopReason::Tolerance: return "tolerance";
    case StopReason::NonFinite: return "non_finite";
  }
  return "?";
}

struct SolveResult {
  JOrthMatrix x;
  std::vector<IterationRecord> trace;
  std::size_t iters = 0;
  double elapsed = 0.0;
  /// NonFinite: the iterate or its gradient overflowed; x holds the last finite iterate.
  StopReason stop = StopReason::MaxIters;
};

struct ResolvedCurvature {
  QSpec q;
  double theta = 0.0;
};

inline ResolvedCurvature resolve_curvature(const SmoothObjective& obj, QMode mode, std::optional<double> theta,
                                           std::optional<double> varsigma) {
  ResolvedCurvature r;
  if (mode == QMode::Exact) {
    const KroneckerH* h = obj.kronecker();
    require(h != nullptr, "Exact mode requires an objective with a Kronecker curvature description");
    r.q = QSpec::exact(*h);
    r.theta = theta.value_or(1e-3);
  } else {
    const double s = varsigma.value_or(obj.lipschitz_bound());
    require(s >= 0.0 && std::isfinite(s), "varsigma must be finite and >= 0");
    r.q = QSpec::scalar(s);
    r.theta = theta.value_or(1e-3 * (1.0 + s));
  }
  require(r.theta > 0.0, "theta must be positive");
  return r;
}

/// Build, solve and apply one block subproblem. Returns the chosen V̄ and the new objective.
inline std::pair<Mat2, double> gs_step(ObjectiveTracker& tracker, JOrthMatrix& x, const BlockPair& b,
                                       const QSpec& q, double theta, SubproblemSolution* out = nullptr) {
  const SubproblemData sp = build_subproblem(x.x(), tracker.gradient_rows(b), b, q, theta);
  const SubproblemSolution sol = solve_block(sp);
  if (out) *out = sol;
  if (sol.case_id != 0) {
    RowPair old_rows(2, x.n());
    old_rows.row(0) = x.x().row(b.i);
    old_rows.row(1) = x.x().row(b.j);
    x.apply_block_update(b, sol.v);
    tracker.rows_updated(x.x(), b, old_rows);
  }
  return {sol.v, tracker.value()};
}

inline SolveResult gs_solve(const SmoothObjective& obj, const JOrthMatrix& x0, const GsConfig& cfg,
                            const TraceCallback& on_trace = {}, const GsStepCallback& on_step = {}) {
  require(cfg.max_iters.has_value() || cfg.time_limit.has_value(),
          "gs_solve: at least one of max_iters / time_limit must be set");
  require(x0.residual() <= 1e-6, "gs_solve: initial point is not feasible (residual > 1e-6)");
  require(x0.n() >= 2, "gs_solve requires n >= 2");
  const ResolvedCurvature curv = resolve_curvature(obj, cfg.q_mode, cfg.theta, cfg.varsigma);
  const std::size_t trace_every = std::max<std::size_t>(1, cfg.trace_every);

  SolveResult res;
  res.x = x0;
  Rng rng(cfg.seed);
  auto tracker = obj.track(res.x.x());
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  const auto record = [&](std::size_t it, double v_dist) {
    tracker->reset(res.x.x());
    IterationRecord r{it, elapsed(), tracker->value(), res.x.residual(), v_dist};
    res.trace.push_back(r);
    if (on_trace) on_trace(r);
  };
  record(0, 0.0);

  const std::size_t n = static_cast<std::size_t>(x0.n());
  const std::size_t window = n * (n - 1) / 2;
  std::deque<double> recent;
  double recent_sum = 0.0;

  std::size_t t = 0;
  while (true) {
    if (cfg.max_iters && t >= *cfg.max_iters) break;
    if (cfg.time_limit && elapsed() >= *cfg.time_limit) {
      res.stop = StopReason::TimeLimit;
      break;
    }

    const BlockPair b = sample_block(res.x.sig(), rng);
    if (!tracker->gradient_rows(b).allFinite() || !std::isfinite(tracker->value())) {
      res.stop = StopReason::NonFinite;
      break;
    }
    GsStepInfo info;
    info.iter = t + 1;
    info.block = b;
    info.f_before = tracker->value();
    if (on_step) info.x_norm_sq = res.x.x().squaredNorm();
    RowPair saved(2, res.x.n());
    saved.row(0) = res.x.x().row(b.i);
    saved.row(1) = res.x.x().row(b.j);
    const auto [v, f_after] = gs_step(*tracker, res.x, b, curv.q, curv.theta, &info.solution);
    if (!std::isfinite(f_after) || !res.x.x().row(b.i).allFinite() || !res.x.x().row(b.j).allFinite()) {
      res.x.mutable_x().row(b.i) = saved.row(0);
      res.x.mutable_x().row(b.j) = saved.row(1);
      res.x.invalidate();
      res.stop = StopReason::NonFinite;
      break;
    }
    info.f_after = f_after;
    info.v_dist = (v - Mat2::Identity()).squaredNorm();
    if (on_step) {
      info.dx_norm_sq = (res.x.x().row(b.i) - saved.row(0)).squaredNorm() +
                        (res.x.x().row(b.j) - saved.row(1)).squaredNorm();
      info.x_after = &res.x;
      on_step(info);
    }
    ++t;

    if ((t % trace_every) == 0) record(t, info.v_dist);

    if (cfg.tolerance) {
      recent.push_back(info.v_dist);
      recent_sum += info.v_dist;
      if (recent.size() > window) {
        recent_sum -= recent.front();
        recent.pop_front();
      }
      if (recent.size() == window && recent_sum / static_cast<double>(window) < *cfg.tolerance) {
        res.stop = StopReason::Tolerance;
        break;
      }
    }
  }
  if (res.trace.back().iter != t) record(t, 0.0);
  res.iters = t;
  res.elapsed = elapsed();
  return res;
}

}  // namespace jobcd
