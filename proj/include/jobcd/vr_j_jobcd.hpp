#pragma once

// Jacobi block coordinate descent over a random perfect matching of the rows,
// with an optional PAGE-style variance-reduced gradient estimator. With the
// estimator disabled (or a single-term objective) this is plain J-JOBCD.

#include "jobcd/gs_jobcd.hpp"

#include <cmath>
#include <thread>

namespace jobcd {

/// Seed for an independent stream derived from the run seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Static-chunk parallel loop over [0, count). Runs inline for threads <= 1.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < count; k += workers) fn(k);
    });
  }
}

/// Running PAGE estimator G̃ with batch sizes (b, b') and switch probability p.
class VRGradState {
 public:
  VRGradState(Index n_terms, std::optional<Index> b = {}, std::optional<Index> b_prime = {},
              std::optional<double> p = {}) {
    require(n_terms >= 1, "VRGradState: objective must have at least one term");
    n_terms_ = n_terms;
    b_ = b.value_or(n_terms);
    b_prime_ = b_prime.value_or(std::max<Index>(1, static_cast<Index>(std::llround(std::sqrt(static_cast<double>(b_))))));
    p_ = p.value_or(static_cast<double>(b_prime_) / static_cast<double>(b_ + b_prime_));
    require(b_ >= 1 && b_prime_ >= 1, "VRGradState: batch sizes must be positive");
    require(p_ >= 0.0 && p_ <= 1.0, "VRGradState: switch probability must lie in [0, 1]");
  }

  Index b() const { return b_; }
  Index b_prime() const { return b_prime_; }
  double p() const { return p_; }
  bool initialized() const { return initialized_; }
  const Matrix& g_tilde() const { return g_tilde_; }
  const Matrix& x_prev() const { return x_prev_; }
  /// Whether the most recent update took the large-batch branch.
  bool last_was_refresh() const { return last_refresh_; }

  /// G̃⁰ from a size-b batch at X⁰.
  void initialize(const FiniteSumObjective& obj, const Matrix& x, Rng& rng) {
    g_tilde_ = large_batch(obj, x, rng);
    x_prev_ = x;
    initialized_ = true;
    last_refresh_ = true;
  }

  /// One estimator step at the new iterate X^t.
  const Matrix& update(const FiniteSumObjective& obj, const Matrix& x, Rng& rng) {
    require(initialized_, "VRGradState: initialize() must be called first");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < p_) {
      g_tilde_ = large_batch(obj, x, rng);
      last_refresh_ = true;
    } else {
      const auto batch = sample(b_prime_, rng);
      g_tilde_ += obj.minibatch_gradient(batch, x) - obj.minibatch_gradient(batch, x_prev_);
      last_refresh_ = false;
    }
    x_prev_ = x;
    return g_tilde_;
  }

 private:
  /// b >= N uses the whole sum; smaller batches are drawn with replacement.
  Matrix large_batch(const FiniteSumObjective& obj, const Matrix& x, Rng& rng) const {
    if (b_ >= n_terms_) return obj.gradient(x);
    const auto batch = sample(b_, rng);
    return obj.minibatch_gradient(batch, x);
  }

  std::vector<Index> sample(Index count, Rng& rng) const {
    std::uniform_int_distribution<Index> pick(0, n_terms_ - 1);
    std::vector<Index> s(static_cast<std::size_t>(count));
    for (auto& v : s) v = pick(rng);
    return s;
  }

  Index n_terms_ = 1;
  Index b_ = 1;
  Index b_prime_ = 1;
  double p_ = 1.0;
  bool initialized_ = false;
  bool last_refresh_ = false;
  Matrix g_tilde_;
  Matrix x_prev_;
};

inline const Matrix& vr_gradient_update(VRGradState& state, const FiniteSumObjective& obj, const Matrix& x,
                                        Rng& rng) {
  if (!state.initialized()) {
    state.initialize(obj, x, rng);
    return state.g_tilde();
  }
  return state.update(obj, x, rng);
}

struct JacobiConfig {
  QMode q_mode = QMode::Scalar;
  std::optional<double> theta;              // default 1e-3 (1 + ς)
  std::optional<double> varsigma;           // default: objective's Lipschitz bound
  std::optional<std::size_t> max_iters;
  std::optional<double> time_limit;
  std::uint64_t seed = 0;
  std::size_t trace_every = 1;
  bool vr_enabled = true;
  std::optional<Index> batch_large;         // b, default N
  std::optional<Index> batch_small;         // b', default max(1, round(sqrt(b)))
  std::optional<double> switch_prob;        // p, default b' / (b + b')
  unsigned threads = 1;
  /// Record ‖G̃ - ∇f‖_F at trace points when N <= this many terms.
  Index estimator_error_max_terms = 4096;
};

/// Solve the n/2 independent subproblems from the snapshot (X, G), then apply
/// every V̄_i to its own row pair.
inline std::vector<SubproblemSolution> jacobi_step(JOrthMatrix& x, const Matrix& g, const BlockGrouping& grouping,
                                                   const QSpec& q, double theta, unsigned threads = 1) {
  require(q.mode == QMode::Scalar, "jacobi_step requires Scalar mode (Q = ςI keeps the blocks independent)");
  require(g.rows() == x.n() && g.cols() == x.n(), "jacobi_step: gradient shape mismatch");
  const auto& pairs = grouping.pairs();
  std::vector<SubproblemSolution> sols(pairs.size());
  const Matrix& snapshot = x.x();
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const SubproblemData sp = build_subproblem(snapshot, g, pairs[k], q, theta);
    sols[k] = solve_block(sp);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (sols[k].case_id != 0) x.apply_block_update(pairs[k], sols[k].v);
  return sols;
}

struct JacobiStepInfo {
  std::size_t iter = 0;
  const BlockGrouping* grouping = nullptr;
  const std::vector<SubproblemSolution>* solutions = nullptr;
  const Matrix* x_before = nullptr;
  const Matrix* x_after = nullptr;
  const Matrix* g = nullptr;
  double v_dist_sum = 0.0;
  bool refresh = true;   // exact / large-batch gradient used this step
};

using JacobiStepCallback = std::function<void(const JacobiStepInfo&)>;

inline SolveResult vrj_solve(const FiniteSumObjective& obj, const JOrthMatrix& x0, const JacobiConfig& cfg,
                             const TraceCallback& on_trace = {}, const JacobiStepCallback& on_step = {}) {
  require(x0.n() % 2 == 0, "n must be even");
  require(cfg.max_iters.has_value() || cfg.time_limit.has_value(),
          "vrj_solve: at least one of max_iters / time_limit must be set");
  require(cfg.q_mode == QMode::Scalar, "vrj_solve requires Scalar mode (Q = ςI keeps the blocks independent)");
  require(x0.residual() <= 1e-6, "vrj_solve: initial point is not feasible (residual > 1e-6)");
  const ResolvedCurvature curv = resolve_curvature(obj, QMode::Scalar, cfg.theta, cfg.varsigma);
  const std::size_t trace_every = std::max<std::size_t>(1, cfg.trace_every);

  const bool use_vr = cfg.vr_enabled && obj.n_terms() > 1;
  Rng group_rng(derive_seed(cfg.seed, 0));
  Rng batch_rng(derive_seed(cfg.seed, 1));
  VRGradState state(obj.n_terms(), cfg.batch_large, cfg.batch_small, cfg.switch_prob);

  SolveResult res;
  res.x = x0;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  Matrix g;
  bool refresh = true;
  const auto next_gradient = [&] {
    if (!use_vr) {
      g = obj.gradient(res.x.x());
      refresh = true;
    } else {
      g = vr_gradient_update(state, obj, res.x.x(), batch_rng);
      refresh = state.last_was_refresh();
    }
  };

  const bool track_err = use_vr && obj.n_terms() <= cfg.estimator_error_max_terms;
  double last_err = std::numeric_limits<double>::quiet_NaN();
  const auto record = [&](std::size_t it, double v_dist) {
    IterationRecord r{it, elapsed(), obj.value(res.x.x()), res.x.residual(), v_dist, last_err};
    res.trace.push_back(r);
    if (on_trace) on_trace(r);
  };
  record(0, 0.0);

  std::size_t t = 0;
  double last_v = 0.0;
  Matrix before;
  while (true) {
    if (cfg.max_iters && t >= *cfg.max_iters) break;
    if (cfg.time_limit && elapsed() >= *cfg.time_limit) {
      res.stop = StopReason::TimeLimit;
      break;
    }

    const BlockGrouping grouping = sample_grouping(res.x.sig(), group_rng);
    next_gradient();
    if (!g.allFinite()) {
      res.stop = StopReason::NonFinite;
      break;
    }
    if (track_err && ((t + 1) % trace_every) == 0) last_err = (g - obj.gradient(res.x.x())).norm();
    before = res.x.x();
    const auto sols = jacobi_step(res.x, g, grouping, curv.q, curv.theta, cfg.threads);
    if (!res.x.x().allFinite()) {
      res.x.mutable_x() = before;
      res.x.invalidate();
      res.stop = StopReason::NonFinite;
      break;
    }
    last_v = 0.0;
    for (const auto& s : sols) last_v += (s.v - Mat2::Identity()).squaredNorm();
    ++t;
    if (on_step) {
      JacobiStepInfo info;
      info.iter = t;
      info.grouping = &grouping;
      info.solutions = &sols;
      info.x_before = &before;
      info.x_after = &res.x.x();
      info.g = &g;
      info.v_dist_sum = last_v;
      info.refresh = refresh;
      on_step(info);
    }
    if ((t % trace_every) == 0) record(t, last_v);
  }
  if (res.trace.back().iter != t) record(t, 0.0);
  res.iters = t;
  res.elapsed = elapsed();
  return res;
}

}  // namespace jobcd
