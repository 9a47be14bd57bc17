#pragma once

// Independent oracles shared by the unit and acceptance tests.

#include "jobcd/jobcd.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace jobcd::testing {

inline Matrix random_symmetric(Index n, Rng& rng) {
  const Matrix g = detail::gaussian(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline Mat4 random_psd4(Rng& rng, double scale = 1.0) {
  const Matrix g = detail::gaussian(4, 4, rng);
  return scale * (g * g.transpose());
}

inline Mat2 random_mat2(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat2 m;
  m << nd(rng), nd(rng), nd(rng), nd(rng);
  return m;
}

/// Subproblem with the given curvature and linear term, built directly.
inline SubproblemData make_subproblem(const Mat4& q, double theta, const Mat2& p, BlockKind kind) {
  SubproblemData sp;
  sp.qdot = q + theta * Mat4::Identity();
  sp.pmat = p;
  sp.kind = kind;
  sp.theta = theta;
  return sp;
}

/// Precomputed (cosh, sinh) / (cos, sin) tables so many instances can share one grid.
struct GridTables {
  std::vector<double> ch, sh, co, si;

  GridTables(double mu_max, double mu_step, double phi_step) {
    const auto n_mu = static_cast<std::size_t>(std::llround(2.0 * mu_max / mu_step)) + 1;
    ch.resize(n_mu);
    sh.resize(n_mu);
    for (std::size_t k = 0; k < n_mu; ++k) {
      const double mu = -mu_max + static_cast<double>(k) * mu_step;
      ch[k] = std::cosh(mu);
      sh[k] = std::sinh(mu);
    }
    const auto n_phi = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / phi_step));
    co.resize(n_phi);
    si.resize(n_phi);
    for (std::size_t k = 0; k < n_phi; ++k) {
      const double phi = static_cast<double>(k) * phi_step;
      co[k] = std::cos(phi);
      si[k] = std::sin(phi);
    }
  }
};

/// min over x = u*A + v*B of 1/2 x^T Q x + p^T x for the (u, v) pairs in the table.
inline double family_grid_min(const SubproblemData& sp, const Mat2& a, const Mat2& b, const std::vector<double>& us,
                              const std::vector<double>& vs) {
  const Vec4 va = vec_rows(a), vb = vec_rows(b), pv = vec_rows(sp.pmat);
  const double qaa = 0.5 * va.dot(sp.qdot * va);
  const double qab = va.dot(sp.qdot * vb);
  const double qbb = 0.5 * vb.dot(sp.qdot * vb);
  const double pa = pv.dot(va), pb = pv.dot(vb);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < us.size(); ++k) {
    const double u = us[k], v = vs[k];
    const double val = u * (qaa * u + qab * v + pa) + v * (qbb * v + pb);
    best = std::min(best, val);
  }
  return best;
}

/// Grid minimum over the four components of O(1,1): diag(e1, e2) [[cosh, sinh], [sinh, cosh]].
inline double hyperbolic_grid_min(const SubproblemData& sp, const GridTables& g) {
  double best = std::numeric_limits<double>::infinity();
  for (double e1 : {1.0, -1.0}) {
    for (double e2 : {1.0, -1.0}) {
      Mat2 a, b;
      a << e1, 0, 0, e2;
      b << 0, e1, e2, 0;
      best = std::min(best, family_grid_min(sp, a, b, g.ch, g.sh));
    }
  }
  return best;
}

/// Grid minimum over O(2): rotations and reflections.
inline double orthogonal_grid_min(const SubproblemData& sp, const GridTables& g) {
  Mat2 ra, rb, fa, fb;
  ra << 1, 0, 0, 1;
  rb << 0, -1, 1, 0;
  fa << 1, 0, 0, -1;
  fb << 0, 1, 1, 0;
  return std::min(family_grid_min(sp, ra, rb, g.co, g.si), family_grid_min(sp, fa, fb, g.co, g.si));
}

/// Eigenvalues of the companion matrix of c[0] t^k + ... + c[k] (leading coefficient nonzero).
inline std::vector<std::complex<double>> companion_eigenvalues(const std::vector<double>& c) {
  const auto k = static_cast<Index>(c.size()) - 1;
  Matrix comp = Matrix::Zero(k, k);
  for (Index j = 0; j < k; ++j) comp(0, j) = -c[static_cast<std::size_t>(j + 1)] / c[0];
  for (Index i = 1; i < k; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(comp, false);
  std::vector<std::complex<double>> out;
  for (Index i = 0; i < k; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

inline double poly_eval(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (double v : c) acc = acc * t + v;
  return acc;
}

/// Central finite-difference gradient.
template <class F>
Matrix fd_gradient(F&& f, const Matrix& x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double fp = f(xp);
      xp(i, j) = orig - h;
      const double fm = f(xp);
      xp(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

/// Random element of J_B for the given kind.
inline Mat2 random_block_matrix(BlockKind kind, Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> nd(0.0, spread);
  std::uniform_int_distribution<int> coin(0, 1);
  const double s1 = coin(rng) ? 1.0 : -1.0;
  const double s2 = coin(rng) ? 1.0 : -1.0;
  const Mat2 base = kind == BlockKind::Hyperbolic ? hyperbolic_rotation(nd(rng)) : givens_rotation(3.0 * nd(rng));
  Mat2 d = Mat2::Zero();
  d(0, 0) = s1;
  d(1, 1) = s2;
  return d * base;
}

/// Objective with ∇f ≡ 0.
class ConstantObjective final : public FiniteSumObjective {
 public:
  explicit ConstantObjective(double c = 1.5) : c_(c) {}
  double value(const Matrix&) const override { return c_; }
  Matrix gradient(const Matrix& x) const override { return Matrix::Zero(x.rows(), x.cols()); }
  double lipschitz_bound() const override { return 1.0; }
  const KroneckerH* kronecker() const override { return nullptr; }
  Index n_terms() const override { return 1; }
  double term_value(Index, const Matrix&) const override { return c_; }
  Matrix term_gradient(Index, const Matrix& x) const override { return Matrix::Zero(x.rows(), x.cols()); }

 private:
  double c_;
};

/// Finite sum of quadratics f_i(X) = 1/2 tr(X^T C_i X D) with H = D ⊗ mean(C_i).
class QuadraticSum final : public FiniteSumObjective {
 public:
  QuadraticSum(std::vector<Matrix> cs, Matrix d) : cs_(std::move(cs)), d_(std::move(d)) {
    Matrix mean = Matrix::Zero(d_.rows(), d_.cols());
    for (const auto& c : cs_) mean += c;
    mean /= static_cast<double>(cs_.size());
    inner_ = std::make_unique<QuadraticObjective>(mean, d_);
  }
  double value(const Matrix& x) const override { return inner_->value(x); }
  Matrix gradient(const Matrix& x) const override { return inner_->gradient(x); }
  const KroneckerH* kronecker() const override { return inner_->kronecker(); }
  double lipschitz_bound() const override { return inner_->lipschitz_bound(); }
  Index n_terms() const override { return static_cast<Index>(cs_.size()); }
  double term_value(Index i, const Matrix& x) const override {
    return 0.5 * (x.transpose() * cs_[static_cast<std::size_t>(i)] * x * d_).trace();
  }
  Matrix term_gradient(Index i, const Matrix& x) const override { return cs_[static_cast<std::size_t>(i)] * x * d_; }

 private:
  std::vector<Matrix> cs_;
  Matrix d_;
  std::unique_ptr<QuadraticObjective> inner_;
};

}  // namespace jobcd::testing
