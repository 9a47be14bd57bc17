#pragma once

#include "jobcd/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace jobcd {

/// Value and gradient rows of f along a trajectory of two-row updates.
/// Implementations may update incrementally; reset() recomputes from scratch.
class ObjectiveTracker {
 public:
  virtual ~ObjectiveTracker() = default;
  virtual double value() const = 0;
  virtual RowPair gradient_rows(const BlockPair& b) const = 0;
  virtual Matrix gradient() const = 0;
  /// `x` already holds the new rows; `old_rows` are the previous X(B,:).
  virtual void rows_updated(const Matrix& x, const BlockPair& b, const RowPair& old_rows) = 0;
  virtual void reset(const Matrix& x) = 0;
};

class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;

  virtual double value(const Matrix& x) const = 0;
  virtual Matrix gradient(const Matrix& x) const = 0;

  /// H = D ⊗ C satisfying f(X+Δ) <= f(X) + <Δ, ∇f(X)> + 1/2 ‖Δ‖²_H, if known.
  virtual const KroneckerH* kronecker() const { return nullptr; }

  /// Estimate of the gradient Lipschitz constant, used as ς in Scalar mode.
  virtual double lipschitz_bound() const = 0;

  virtual std::unique_ptr<ObjectiveTracker> track(const Matrix& x) const;
};

/// f(X) = (1/N) Σ_i f_i(X).
class FiniteSumObjective : public SmoothObjective {
 public:
  virtual Index n_terms() const = 0;
  virtual double term_value(Index i, const Matrix& x) const = 0;
  virtual Matrix term_gradient(Index i, const Matrix& x) const = 0;

  /// (1/|S|) Σ_{i∈S} ∇f_i(X)
  virtual Matrix minibatch_gradient(std::span<const Index> batch, const Matrix& x) const {
    require(!batch.empty(), "minibatch_gradient: empty batch");
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Index i : batch) g += term_gradient(i, x);
    return g / static_cast<double>(batch.size());
  }
};

/// Treats any smooth objective as a one-term finite sum.
class SingleTermObjective final : public FiniteSumObjective {
 public:
  explicit SingleTermObjective(const SmoothObjective& inner) : inner_(inner) {}
  double value(const Matrix& x) const override { return inner_.value(x); }
  Matrix gradient(const Matrix& x) const override { return inner_.gradient(x); }
  const KroneckerH* kronecker() const override { return inner_.kronecker(); }
  double lipschitz_bound() const override { return inner_.lipschitz_bound(); }
  std::unique_ptr<ObjectiveTracker> track(const Matrix& x) const override { return inner_.track(x); }
  Index n_terms() const override { return 1; }
  double term_value(Index, const Matrix& x) const override { return inner_.value(x); }
  Matrix term_gradient(Index, const Matrix& x) const override { return inner_.gradient(x); }

 private:
  const SmoothObjective& inner_;
};

/// Recomputes value and gradient after every update.
class RecomputingTracker final : public ObjectiveTracker {
 public:
  RecomputingTracker(const SmoothObjective& obj, const Matrix& x) : obj_(obj) { reset(x); }
  double value() const override { return value_; }
  RowPair gradient_rows(const BlockPair& b) const override {
    RowPair r(2, grad_.cols());
    r.row(0) = grad_.row(b.i);
    r.row(1) = grad_.row(b.j);
    return r;
  }
  Matrix gradient() const override { return grad_; }
  void rows_updated(const Matrix& x, const BlockPair&, const RowPair&) override { reset(x); }
  void reset(const Matrix& x) override {
    value_ = obj_.value(x);
    grad_ = obj_.gradient(x);
  }

 private:
  const SmoothObjective& obj_;
  double value_ = 0.0;
  Matrix grad_;
};

inline std::unique_ptr<ObjectiveTracker> SmoothObjective::track(const Matrix& x) const {
  return std::make_unique<RecomputingTracker>(*this, x);
}

/// Largest eigenvalue magnitude of a symmetric matrix. Dense eigensolve up to
/// n = 1000, power iteration beyond that.
inline double spectral_norm_sym(const Matrix& a, int max_iters = 500, double tol = 1e-12) {
  require(a.rows() == a.cols(), "spectral_norm_sym: matrix must be square");
  if (a.rows() == 0) return 0.0;
  if (a.rows() <= 1000) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Vector v = Vector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  // deterministic, non-symmetric start so an eigenvector orthogonal to 1 is still reached
  for (Index k = 0; k < v.size(); ++k) v(k) += 1e-3 * static_cast<double>(k % 7);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = a * v;
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    const double next = std::abs(v.dot(w));
    v = w / nrm;
    if (std::abs(next - lambda) <= tol * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(lambda, (a * v).norm());
}

namespace objective_detail {

inline void require_symmetric(const Matrix& m, const char* what) {
  require(m.rows() == m.cols(), std::string(what) + " must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          std::string(what) + " must be symmetric");
}

/// Incremental tracker for f = 1/2 tr(X^T C X D) (+ constant), ∇f = C X D.
class QuadraticTracker final : public ObjectiveTracker {
 public:
  QuadraticTracker(const Matrix& c, const Matrix* d, const Matrix& x) : c_(c), d_(d) { reset(x); }

  double value() const override { return value_; }
  RowPair gradient_rows(const BlockPair& b) const override {
    RowPair r(2, g_.cols());
    r.row(0) = g_.row(b.i);
    r.row(1) = g_.row(b.j);
    return r;
  }
  Matrix gradient() const override { return g_; }

  void rows_updated(const Matrix& x, const BlockPair& b, const RowPair& old_rows) override {
    RowPair e(2, x.cols());
    e.row(0) = x.row(b.i) - old_rows.row(0);
    e.row(1) = x.row(b.j) - old_rows.row(1);
    const RowPair ed = d_ ? RowPair(e * (*d_)) : e;
    Mat2 cbb;
    cbb << c_(b.i, b.i), c_(b.i, b.j), c_(b.j, b.i), c_(b.j, b.j);
    const double lin = e.row(0).dot(g_.row(b.i)) + e.row(1).dot(g_.row(b.j));
    const double quad = 0.5 * (cbb * ed).cwiseProduct(e).sum();
    value_ += lin + quad;
    g_.noalias() += c_.col(b.i) * ed.row(0);
    g_.noalias() += c_.col(b.j) * ed.row(1);
  }

  void reset(const Matrix& x) override {
    g_ = d_ ? Matrix(c_ * x * (*d_)) : Matrix(c_ * x);
    value_ = 0.5 * x.cwiseProduct(g_).sum();
  }

 private:
  const Matrix& c_;
  const Matrix* d_;
  double value_ = 0.0;
  Matrix g_;
};

}  // namespace objective_detail

/// f(X) = 1/2 tr(X^T C X D) with symmetric C, D; H = D ⊗ C.
class QuadraticObjective final : public SmoothObjective {
 public:
  QuadraticObjective(Matrix c, Matrix d) {
    objective_detail::require_symmetric(c, "quadratic_objective: C");
    objective_detail::require_symmetric(d, "quadratic_objective: D");
    require(c.rows() == d.rows(), "quadratic_objective: C and D must have the same size");
    h_.c = std::move(c);
    h_.d = std::move(d);
  }

  double value(const Matrix& x) const override {
    return 0.5 * (x.transpose() * h_.c * x * h_.d).trace();
  }
  Matrix gradient(const Matrix& x) const override {
    return 0.5 * (h_.c * x * h_.d + h_.c.transpose() * x * h_.d.transpose());
  }
  const KroneckerH* kronecker() const override { return &h_; }
  double lipschitz_bound() const override { return spectral_norm_sym(h_.c) * spectral_norm_sym(h_.d); }
  std::unique_ptr<ObjectiveTracker> track(const Matrix& x) const override {
    return std::make_unique<objective_detail::QuadraticTracker>(h_.c, &h_.d, x);
  }

  const Matrix& c() const { return h_.c; }
  const Matrix& d() const { return h_.d; }

 private:
  KroneckerH h_;
};

/// Hyperbolic eigenvalue objective f(X) = -tr(X^T DᵀD X), split over the m data rows
/// as f_i(X) = -m ‖D_i X‖².
class HevpObjective final : public FiniteSumObjective {
 public:
  explicit HevpObjective(Matrix data) : data_(std::move(data)) {
    require(data_.rows() >= 1 && data_.cols() >= 1, "hevp_objective: empty data matrix");
    gram_ = data_.transpose() * data_;
    neg2_gram_ = -2.0 * gram_;
    zero_h_.c = Matrix::Zero(data_.cols(), data_.cols());
    zero_h_.d = Matrix::Zero(data_.cols(), data_.cols());
    lipschitz_ = 2.0 * spectral_norm_sym(gram_);
  }

  double value(const Matrix& x) const override { return -(x.transpose() * gram_ * x).trace(); }
  Matrix gradient(const Matrix& x) const override { return neg2_gram_ * x; }

  /// f is concave, so H = 0 is a valid upper model.
  const KroneckerH* kronecker() const override { return &zero_h_; }
  double lipschitz_bound() const override { return lipschitz_; }

  std::unique_ptr<ObjectiveTracker> track(const Matrix& x) const override {
    return std::make_unique<objective_detail::QuadraticTracker>(neg2_gram_, nullptr, x);
  }

  Index n_terms() const override { return data_.rows(); }
  double term_value(Index i, const Matrix& x) const override {
    return -static_cast<double>(data_.rows()) * (data_.row(i) * x).squaredNorm();
  }
  Matrix term_gradient(Index i, const Matrix& x) const override {
    const Eigen::RowVectorXd r = data_.row(i) * x;
    return (-2.0 * static_cast<double>(data_.rows())) * data_.row(i).transpose() * r;
  }
  Matrix minibatch_gradient(std::span<const Index> batch, const Matrix& x) const override {
    require(!batch.empty(), "minibatch_gradient: empty batch");
    Matrix rows(static_cast<Index>(batch.size()), data_.cols());
    for (std::size_t k = 0; k < batch.size(); ++k) rows.row(static_cast<Index>(k)) = data_.row(batch[k]);
    const double w = -2.0 * static_cast<double>(data_.rows()) / static_cast<double>(batch.size());
    return w * (rows.transpose() * (rows * x));
  }

  const Matrix& data() const { return data_; }
  const Matrix& gram() const { return gram_; }

 private:
  Matrix data_;
  Matrix gram_;
  Matrix neg2_gram_;
  KroneckerH zero_h_;
  double lipschitz_ = 0.0;
};

/// Ultrahyperbolic geodesic distance on U_α^{p,q}.
inline double ultrahyperbolic_distance(const Vector& x, const Vector& y, const Signature& sig, double alpha) {
  require(alpha > 0.0, "ultrahyperbolic_distance: alpha must be positive");
  require(x.size() == sig.n() && y.size() == sig.n(), "ultrahyperbolic_distance: dimension mismatch");
  const double u = std::abs(sig.inner(x, y) / (alpha * alpha));
  return u >= 1.0 ? alpha * std::acosh(u) : alpha * std::acos(u);
}

/// d(d_α)/du at u = <x,y>_q / α², zero inside the kink band around |u| = 1.
inline double ultrahyperbolic_distance_slope(double u, double alpha, double band = 1e-8) {
  const double au = std::abs(u);
  if (std::abs(au - 1.0) <= band) return 0.0;
  const double sgn = u >= 0.0 ? 1.0 : -1.0;
  return au > 1.0 ? alpha * sgn / std::sqrt(au * au - 1.0) : -alpha * sgn / std::sqrt(1.0 - au * au);
}

/// Double projection of a row onto U_α^{p,q} (canonical signature: head = first p entries).
inline Vector diffeomorphism_phi(const Vector& row, const Signature& sig, double alpha) {
  require(alpha > 0.0, "diffeomorphism_phi: alpha must be positive");
  require(sig.canonical(), "diffeomorphism_phi requires a canonical signature");
  require(row.size() == sig.n(), "diffeomorphism_phi: dimension mismatch");
  const Index p = sig.p();
  const Index q = sig.n() - p;
  const Vector head = row.head(p);
  const Vector tail = row.tail(q);
  const double tn = tail.norm();
  require(q > 0 && tn > 0.0, "diffeomorphism_phi: degenerate row (zero tail)");
  Vector out(row.size());
  out.head(p) = head;
  // ψ gives tail α t/‖t‖; ψ⁻¹ rescales it by sqrt(α² + ‖s‖²)/α
  out.tail(q) = (std::sqrt(alpha * alpha + head.squaredNorm()) / tn) * tail;
  return out;
}

/// Hyperbolic structural probe: f(X) = (1/m²) Σ_ij (T_ij - d_α(Q_i, Q_j))², Q = φ(D) X,
/// split over rows i as f_i = (1/m) Σ_j (T_ij - d_α(Q_i, Q_j))².
class HsppObjective final : public FiniteSumObjective {
 public:
  HsppObjective(const Matrix& data, Matrix targets, double alpha, Signature manifold, double varsigma)
      : targets_(std::move(targets)), alpha_(alpha), sig_(std::move(manifold)), varsigma_(varsigma) {
    require(alpha_ > 0.0, "hspp_objective: alpha must be positive");
    require(data.cols() == sig_.n(), "hspp_objective: data width must match the signature");
    require(targets_.rows() == data.rows() && targets_.cols() == data.rows(),
            "hspp_objective: targets must be m x m");
    mapped_.resize(data.rows(), data.cols());
    for (Index i = 0; i < data.rows(); ++i)
      mapped_.row(i) = diffeomorphism_phi(data.row(i).transpose(), sig_, alpha_).transpose();
  }

  double value(const Matrix& x) const override {
    const Matrix q = mapped_ * x;
    const Index m = q.rows();
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += row_sum(q, i);
    return s / static_cast<double>(m * m);
  }

  Matrix gradient(const Matrix& x) const override {
    const Matrix q = mapped_ * x;
    const Index m = q.rows();
    const Matrix w = weights(q) / static_cast<double>(m * m);
    return chain(q, w + w.transpose());
  }

  double lipschitz_bound() const override { return varsigma_; }
  void set_lipschitz_bound(double v) { varsigma_ = v; }

  Index n_terms() const override { return mapped_.rows(); }
  double term_value(Index i, const Matrix& x) const override {
    const Matrix q = mapped_ * x;
    return row_sum(q, i) / static_cast<double>(q.rows());
  }
  Matrix term_gradient(Index i, const Matrix& x) const override {
    const Matrix q = mapped_ * x;
    return term_gradient_from(i, q);
  }
  Matrix minibatch_gradient(std::span<const Index> batch, const Matrix& x) const override {
    require(!batch.empty(), "minibatch_gradient: empty batch");
    const Matrix q = mapped_ * x;
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Index i : batch) g += term_gradient_from(i, q);
    return g / static_cast<double>(batch.size());
  }

  const Matrix& mapped() const { return mapped_; }
  const Matrix& targets() const { return targets_; }
  double alpha() const { return alpha_; }
  const Signature& manifold() const { return sig_; }

 private:
  double inner(const Matrix& q, Index i, Index j) const {
    return (q.row(i).array() * sig_.diagonal().transpose().array() * q.row(j).array()).sum();
  }

  double row_sum(const Matrix& q, Index i) const {
    double s = 0.0;
    for (Index j = 0; j < q.rows(); ++j) {
      const double r = targets_(i, j) - ultrahyperbolic_distance(q.row(i).transpose(), q.row(j).transpose(),
                                                                 sig_, alpha_);
      s += r * r;
    }
    return s;
  }

  /// ∂/∂u_ij of Σ (T_ij - d_ij)², unscaled.
  double weight(const Matrix& q, Index i, Index j) const {
    const double a2 = alpha_ * alpha_;
    const double u = inner(q, i, j) / a2;
    const double au = std::abs(u);
    const double d = au >= 1.0 ? alpha_ * std::acosh(au) : alpha_ * std::acos(au);
    return -2.0 * (targets_(i, j) - d) * ultrahyperbolic_distance_slope(u, alpha_);
  }

  Matrix weights(const Matrix& q) const {
    const Index m = q.rows();
    Matrix w(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) w(i, j) = weight(q, i, j);
    return w;
  }

  /// ∂f/∂X = Φ^T (S Q J) / α² for ∂f/∂U = S/2 with U = Q J Qᵀ / α².
  Matrix chain(const Matrix& q, const Matrix& sym) const {
    const Matrix qj = q * sig_.diagonal().asDiagonal();
    return mapped_.transpose() * (sym * qj) / (alpha_ * alpha_);
  }

  Matrix term_gradient_from(Index i, const Matrix& q) const {
    const Index m = q.rows();
    Vector wi(m);
    for (Index j = 0; j < m; ++j) wi(j) = weight(q, i, j) / static_cast<double>(m);
    // (e_i w_iᵀ + w_i e_iᵀ) Q J, pushed through Φᵀ
    const Matrix qj = q * sig_.diagonal().asDiagonal();
    const Eigen::RowVectorXd top = wi.transpose() * qj;
    Matrix g = mapped_.row(i).transpose() * top;
    g += (mapped_.transpose() * wi) * qj.row(i);
    return g / (alpha_ * alpha_);
  }

  Matrix mapped_;
  Matrix targets_;
  double alpha_;
  Signature sig_;
  double varsigma_;
};

/// Pairwise Euclidean distances between the rows of D.
inline Matrix euclidean_distance_matrix(const Matrix& data) {
  const Index m = data.rows();
  Matrix t(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) t(i, j) = (data.row(i) - data.row(j)).norm();
  return t;
}

/// Two-times the largest sampled gradient-difference ratio over random feasible pairs
/// (X, X') where X' is X after a few small random block steps.
inline double sampled_lipschitz_estimate(const SmoothObjective& obj, const Signature& sig, std::uint64_t seed,
                                         int pairs = 50, double init_scale = 1.0) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  double best = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const JOrthMatrix base = cs_random_init(sig, seed + static_cast<std::uint64_t>(k) + 1, init_scale);
    Matrix moved = base.x();
    for (int s = 0; s < 3 && sig.n() >= 2; ++s) {
      const BlockPair b = sample_block(sig, rng);
      const double step = 0.1 * nd(rng);
      apply_block_rows(moved, b,
                       b.kind == BlockKind::Hyperbolic ? hyperbolic_rotation(step) : givens_rotation(step));
    }
    const double dx = (moved - base.x()).norm();
    if (dx == 0.0) continue;
    const double dg = (obj.gradient(moved) - obj.gradient(base.x())).norm();
    if (std::isfinite(dg)) best = std::max(best, dg / dx);
  }
  return 2.0 * best;
}

/// HSPP with the sampled ς estimate; targets default to the Euclidean distances of D.
inline HsppObjective hspp_objective(const Matrix& data, std::optional<Matrix> targets, double alpha,
                                    const Signature& manifold, std::uint64_t seed = 0) {
  HsppObjective obj(data, targets ? *targets : euclidean_distance_matrix(data), alpha, manifold, 0.0);
  obj.set_lipschitz_bound(sampled_lipschitz_estimate(obj, manifold, seed));
  return obj;
}

}  // namespace jobcd
