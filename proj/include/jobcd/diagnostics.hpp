#pragma once

#include "jobcd/gs_jobcd.hpp"

namespace jobcd {

struct StationarityReport {
  double riemannian_norm = 0.0;
  double symmetry_defect = 0.0;
  double bs_estimate = 0.0;
  std::size_t samples = 0;
};

/// ∇f(X) - J X ∇f(X)^T X J; vanishes exactly at critical points.
inline Matrix riemannian_gradient(const Matrix& x, const Matrix& grad, const Signature& sig) {
  const auto j = sig.diagonal().asDiagonal();
  return grad - j * x * grad.transpose() * x * j;
}

inline Matrix riemannian_gradient(const SmoothObjective& obj, const JOrthMatrix& x) {
  return riemannian_gradient(x.x(), obj.gradient(x.x()), x.sig());
}

/// ‖M - M^T‖_F with M = X ∇f(X)^T J.
inline double symmetry_defect(const Matrix& x, const Matrix& grad, const Signature& sig) {
  const Matrix m = x * grad.transpose() * sig.diagonal().asDiagonal();
  return (m - m.transpose()).norm();
}

inline double symmetry_defect(const SmoothObjective& obj, const JOrthMatrix& x) {
  return symmetry_defect(x.x(), obj.gradient(x.x()), x.sig());
}

/// Mean of ‖V̄_B - I₂‖²_F over blocks, with V̄_B the global subproblem minimizer at X
/// under the exact gradient. Enumerates every pair when C(n,2) <= n_samples.
inline double bs_estimate(const Matrix& x, const Matrix& grad, const Signature& sig, const QSpec& q, double theta,
                          std::size_t n_samples, Rng& rng, std::size_t* used = nullptr) {
  const Index n = sig.n();
  const std::size_t total = static_cast<std::size_t>(n * (n - 1) / 2);
  double sum = 0.0;
  std::size_t count = 0;
  const auto visit = [&](const BlockPair& b) {
    const SubproblemSolution sol = solve_block(build_subproblem(x, grad, b, q, theta));
    sum += (sol.v - Mat2::Identity()).squaredNorm();
    ++count;
  };
  if (total <= n_samples) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) visit(BlockPair::make(sig, i, j));
  } else {
    for (std::size_t k = 0; k < n_samples; ++k) visit(sample_block(sig, rng));
  }
  if (used) *used = count;
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline double bs_estimate(const SmoothObjective& obj, const JOrthMatrix& x, QMode mode, std::optional<double> theta,
                          std::optional<double> varsigma, std::size_t n_samples, Rng& rng,
                          std::size_t* used = nullptr) {
  const ResolvedCurvature curv = resolve_curvature(obj, mode, theta, varsigma);
  return bs_estimate(x.x(), obj.gradient(x.x()), x.sig(), curv.q, curv.theta, n_samples, rng, used);
}

inline StationarityReport stationarity_report(const SmoothObjective& obj, const JOrthMatrix& x, QMode mode,
                                              std::optional<double> theta, std::optional<double> varsigma,
                                              std::size_t n_samples, Rng& rng) {
  const Matrix g = obj.gradient(x.x());
  const ResolvedCurvature curv = resolve_curvature(obj, mode, theta, varsigma);
  StationarityReport r;
  r.riemannian_norm = riemannian_gradient(x.x(), g, x.sig()).norm();
  r.symmetry_defect = symmetry_defect(x.x(), g, x.sig());
  r.bs_estimate = bs_estimate(x.x(), g, x.sig(), curv.q, curv.theta, n_samples, rng, &r.samples);
  return r;
}

}  // namespace jobcd
