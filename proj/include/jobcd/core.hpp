#pragma once

#include "jobcd/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace jobcd {

using Rng = std::mt19937_64;

/// Sum over all entries of |X^T J X - J|.
inline double feasibility_residual(const Matrix& x, const Signature& sig) {
  require(x.rows() == x.cols(), "feasibility_residual: matrix must be square");
  require(x.rows() == sig.n(), "feasibility_residual: dimension mismatch with signature");
  const Matrix jx = sig.diagonal().asDiagonal() * x;
  Matrix g = x.transpose() * jx;
  g.diagonal() -= sig.diagonal();
  return g.cwiseAbs().sum();
}

/// V^T J_BB V - J_BB for a 2x2 block, entrywise absolute sum.
inline double block_feasibility_defect(const Mat2& v, const Mat2& j_bb) {
  return (v.transpose() * j_bb * v - j_bb).cwiseAbs().sum();
}

/// Rows (i, j) of x <- V * x(B, :). Only touches the two rows, so calls on
/// disjoint pairs may run concurrently.
inline void apply_block_rows(Matrix& x, const BlockPair& b, const Mat2& v) {
  const Eigen::RowVectorXd ri = x.row(b.i);
  const Eigen::RowVectorXd rj = x.row(b.j);
  x.row(b.i) = v(0, 0) * ri + v(0, 1) * rj;
  x.row(b.j) = v(1, 0) * ri + v(1, 1) * rj;
}

/// Dense n x n iterate kept (up to rounding) on {X : X^T J X = J}.
class JOrthMatrix {
 public:
  JOrthMatrix() = default;
  JOrthMatrix(Matrix x, Signature sig) : x_(std::move(x)), sig_(std::move(sig)) {
    require(x_.rows() == x_.cols(), "JOrthMatrix: matrix must be square");
    require(x_.rows() == sig_.n(), "JOrthMatrix: dimension mismatch with signature");
  }

  const Matrix& x() const { return x_; }
  const Signature& sig() const { return sig_; }
  Index n() const { return x_.rows(); }

  double residual() const {
    if (!residual_) residual_ = feasibility_residual(x_, sig_);
    return *residual_;
  }

  /// X(B,:) <- V X(B,:). Rejects V that is not J_BB-orthogonal.
  void apply_block_update(const BlockPair& b, const Mat2& v) {
    const double tol = 1e-10 * std::max(1.0, v.squaredNorm());
    require(block_feasibility_defect(v, b.j_block(sig_)) <= tol,
            "apply_block_update: V is not J_BB-orthogonal");
    apply_block_rows(x_, b, v);
    residual_.reset();
  }

  /// Mutable access for batched disjoint updates; call invalidate() afterwards.
  Matrix& mutable_x() {
    residual_.reset();
    return x_;
  }
  void invalidate() { residual_.reset(); }

 private:
  Matrix x_;
  Signature sig_;
  mutable std::optional<double> residual_;
};

namespace detail {

inline Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = nd(rng);
  return m;
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed R diagonal.
inline Matrix haar_orthogonal(Index k, Rng& rng) {
  if (k == 0) return Matrix(0, 0);
  Eigen::HouseholderQR<Matrix> qr(gaussian(k, k, rng));
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index c = 0; c < k; ++c)
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  return q;
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

/// diag(U1,U2) * [[C,0,S],[0,I,0],[S,0,C]] * diag(V1,V2)^T for signature (p, q), p >= q.
inline Matrix hyperbolic_cs_compose(Index p, Index q, const Vector& s_dot, Rng& rng) {
  const Index n = p + q;
  Matrix core = Matrix::Identity(n, n);
  for (Index k = 0; k < q; ++k) {
    const double s = s_dot(k);
    const double c = std::sqrt(1.0 + s * s);
    core(k, k) = c;
    core(p + k, p + k) = c;
    core(k, p + k) = s;
    core(p + k, k) = s;
  }
  const Matrix u = block_diag(haar_orthogonal(p, rng), haar_orthogonal(q, rng));
  const Matrix v = block_diag(haar_orthogonal(p, rng), haar_orthogonal(q, rng));
  return u * core * v.transpose();
}

}  // namespace detail

/// Random feasible starting point built from the hyperbolic CS structure.
/// `scale` multiplies the |N(0,1)| draws of the sinh parameters; 0 yields an
/// orthogonal block-diagonal matrix.
inline JOrthMatrix cs_random_init(const Signature& sig, std::uint64_t seed, double scale = 1.0) {
  require(sig.canonical(), "cs_random_init requires a canonical (sorted) signature");
  require(scale >= 0.0 && std::isfinite(scale), "cs_random_init: scale must be finite and >= 0");
  Rng rng(seed);
  const Index n = sig.n();
  const Index p = sig.p();
  const Index q = n - p;
  const Index big = std::max(p, q);
  const Index small = std::min(p, q);

  std::normal_distribution<double> nd(0.0, 1.0);
  Vector s_dot(small);
  for (Index k = 0; k < small; ++k) s_dot(k) = scale * std::abs(nd(rng));

  Matrix x = detail::hyperbolic_cs_compose(big, small, s_dot, rng);
  if (p < q) {
    // Built for diag(I_q, -I_p); conjugate by the block swap to land on diag(I_p, -I_q).
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
    for (Index k = 0; k < n; ++k) perm.indices()(k) = static_cast<int>((k + p) % n);
    x = perm * x * perm.transpose();
  }
  return JOrthMatrix(std::move(x), sig);
}

/// Uniform draw from all C(n,2) unordered pairs.
inline BlockPair sample_block(const Signature& sig, Rng& rng) {
  const Index n = sig.n();
  require(n >= 2, "sample_block requires n >= 2");
  std::uniform_int_distribution<Index> first(0, n - 1);
  std::uniform_int_distribution<Index> second(0, n - 2);
  const Index a = first(rng);
  Index b = second(rng);
  if (b >= a) ++b;
  return BlockPair::make(sig, a, b);
}

/// Random permutation of the rows chunked into consecutive pairs.
inline BlockGrouping sample_grouping(const Signature& sig, Rng& rng) {
  const Index n = sig.n();
  require(n % 2 == 0, "n must be even");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<BlockPair> pairs;
  pairs.reserve(perm.size() / 2);
  for (std::size_t k = 0; k + 1 < perm.size(); k += 2)
    pairs.push_back(BlockPair::make(sig, perm[k], perm[k + 1]));
  return BlockGrouping(sig, std::move(pairs));
}

/// Hyperbolic rotation [[cosh mu, sinh mu], [sinh mu, cosh mu]].
inline Mat2 hyperbolic_rotation(double mu) {
  Mat2 v;
  v << std::cosh(mu), std::sinh(mu), std::sinh(mu), std::cosh(mu);
  return v;
}

/// Givens rotation [[cos phi, -sin phi], [sin phi, cos phi]].
inline Mat2 givens_rotation(double phi) {
  Mat2 v;
  v << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return v;
}

}  // namespace jobcd
