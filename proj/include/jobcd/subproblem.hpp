#pragma once

// Exact global solver for the 2x2 block subproblem
//
//   min_{V in J_B}  1/2 vec(V)^T Qdot vec(V) + <V, P>
//
// over the hyperbolic group O(1,1) (mixed-sign blocks) or O(2) (same-sign
// blocks). 4-vectors use row-major stacking, vec(V) = (V11, V12, V21, V22).

#include "jobcd/core.hpp"
#include "jobcd/quartic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace jobcd {

inline Vec4 vec_rows(const Mat2& v) { return Vec4(v(0, 0), v(0, 1), v(1, 0), v(1, 1)); }

inline Mat2 mat_rows(const Vec4& v) {
  Mat2 m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

enum class QMode { Exact, Scalar };

/// How the 4x4 curvature Q is chosen for a block.
struct QSpec {
  QMode mode = QMode::Scalar;
  double varsigma = 0.0;             // Scalar: Q = varsigma * I4
  const KroneckerH* h = nullptr;     // Exact: H = D ⊗ C of the objective

  static QSpec scalar(double varsigma) { return QSpec{QMode::Scalar, varsigma, nullptr}; }
  static QSpec exact(const KroneckerH& h) { return QSpec{QMode::Exact, 0.0, &h}; }
};

struct SubproblemData {
  Mat4 qdot = Mat4::Identity();
  Mat2 pmat = Mat2::Zero();
  BlockKind kind = BlockKind::Hyperbolic;
  double theta = 0.0;

  /// 1/2 ‖V‖²_Qdot + <V, P>
  double value(const Mat2& v) const {
    const Vec4 x = vec_rows(v);
    return 0.5 * x.dot(qdot * x) + x.dot(vec_rows(pmat));
  }
};

/// Coefficients of a c + b s + c c^2 + d c s + e s^2 with w = c + e.
struct ReducedCoeffs {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0, w = 0.0;
};

struct SubproblemSolution {
  Mat2 v = Mat2::Identity();
  double value = 0.0;
  /// 0 is the identity; 1..4 are the hyperbolic families, 1..2 rotation/reflection.
  int case_id = 0;
};

/// [grad X^T]_BB from the two gradient rows and the two iterate rows.
inline Mat2 block_gradient_product(const RowPair& grad_rows, const Matrix& x, const BlockPair& b) {
  Mat2 g;
  g(0, 0) = grad_rows.row(0).dot(x.row(b.i));
  g(0, 1) = grad_rows.row(0).dot(x.row(b.j));
  g(1, 0) = grad_rows.row(1).dot(x.row(b.i));
  g(1, 1) = grad_rows.row(1).dot(x.row(b.j));
  return g;
}

/// 4x4 block curvature: ςI in Scalar mode, or C_BB ⊗ (Z D Z^T) with Z = X(B,:) in
/// Exact mode, so that vec(Δ)^T Q vec(Δ) = ‖U_B Δ U_B^T X‖²_H.
inline Mat4 block_curvature(const Matrix& x, const BlockPair& b, const QSpec& q) {
  if (q.mode == QMode::Scalar) {
    require(q.varsigma >= 0.0 && std::isfinite(q.varsigma), "Scalar mode requires varsigma >= 0");
    return q.varsigma * Mat4::Identity();
  }
  require(q.h != nullptr, "Exact mode requires a Kronecker curvature description");
  const KroneckerH& h = *q.h;
  require(h.c.rows() == x.rows() && h.d.rows() == x.rows(), "Exact mode: curvature dimension mismatch");
  RowPair z(2, x.cols());
  z.row(0) = x.row(b.i);
  z.row(1) = x.row(b.j);
  const Mat2 m = z * h.d * z.transpose();
  Mat2 cb;
  cb << h.c(b.i, b.i), h.c(b.i, b.j), h.c(b.j, b.i), h.c(b.j, b.j);
  Mat4 out;
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) out.block<2, 2>(2 * r, 2 * s) = cb(r, s) * m;
  return out;
}

/// Subproblem from the gradient rows ∇f(X)(B,:).
inline SubproblemData build_subproblem(const Matrix& x, const RowPair& grad_rows, const BlockPair& b,
                                       const QSpec& q, double theta) {
  require(theta > 0.0, "build_subproblem: theta must be positive");
  require(grad_rows.cols() == x.cols(), "build_subproblem: gradient row width mismatch");
  SubproblemData sp;
  sp.kind = b.kind;
  sp.theta = theta;
  sp.qdot = block_curvature(x, b, q);
  sp.qdot = 0.5 * (sp.qdot + sp.qdot.transpose()).eval();
  sp.qdot.diagonal().array() += theta;
  const Mat2 gx = block_gradient_product(grad_rows, x, b);
  sp.pmat = gx - mat_rows(sp.qdot * vec_rows(Mat2::Identity()));
  return sp;
}

/// Subproblem from the full n x n gradient.
inline SubproblemData build_subproblem(const Matrix& x, const Matrix& grad, const BlockPair& b,
                                       const QSpec& q, double theta) {
  require(grad.rows() == x.rows() && grad.cols() == x.cols(), "build_subproblem: gradient shape mismatch");
  RowPair rows(2, x.cols());
  rows.row(0) = grad.row(b.i);
  rows.row(1) = grad.row(b.j);
  return build_subproblem(x, rows, b, q, theta);
}

/// The four sign families of O(1,1) used by the hyperbolic solver.
inline Mat2 hyperbolic_case_matrix(int which, double c, double s) {
  Mat2 v;
  switch (which) {
    case 1: v << c, s, s, c; break;
    case 2: v << c, -s, -s, c; break;
    case 3: v << -c, -s, s, c; break;
    case 4: v << c, -s, s, -c; break;
    default: throw Error("hyperbolic case must be in 1..4");
  }
  return v;
}

/// Reduced coefficients for one hyperbolic family (1-based Q/P indices in comments).
inline ReducedCoeffs reduce_hyperbolic(const SubproblemData& sp, int which) {
  require(sp.kind == BlockKind::Hyperbolic, "reduce_hyperbolic: block is not hyperbolic");
  const auto Q = [&](int r, int c) { return sp.qdot(r - 1, c - 1); };
  const auto P = [&](int r, int c) { return sp.pmat(r - 1, c - 1); };
  ReducedCoeffs k;
  switch (which) {
    case 1:
      k.a = P(1, 1) + P(2, 2);
      k.b = P(1, 2) + P(2, 1);
      k.c = 0.5 * (Q(1, 1) + Q(4, 1) + Q(1, 4) + Q(4, 4));
      k.d = 0.5 * (Q(2, 1) + Q(3, 1) + Q(1, 2) + Q(4, 2) + Q(1, 3) + Q(4, 3) + Q(2, 4) + Q(3, 4));
      k.e = 0.5 * (Q(2, 2) + Q(3, 2) + Q(2, 3) + Q(3, 3));
      break;
    case 2:
      k.a = P(1, 1) + P(2, 2);
      k.b = -P(1, 2) - P(2, 1);
      k.c = 0.5 * (Q(1, 1) + Q(4, 1) + Q(1, 4) + Q(4, 4));
      k.d = -0.5 * (Q(2, 1) + Q(3, 1) + Q(1, 2) + Q(4, 2) + Q(1, 3) + Q(4, 3) + Q(2, 4) + Q(3, 4));
      k.e = 0.5 * (Q(2, 2) + Q(3, 2) + Q(2, 3) + Q(3, 3));
      break;
    case 3:
      k.a = -P(1, 1) + P(2, 2);
      k.b = -P(1, 2) + P(2, 1);
      k.c = 0.5 * (Q(1, 1) - Q(4, 1) - Q(1, 4) + Q(4, 4));
      k.d = 0.5 * (Q(2, 1) - Q(3, 1) + Q(1, 2) - Q(4, 2) - Q(1, 3) + Q(4, 3) - Q(2, 4) + Q(3, 4));
      k.e = 0.5 * (Q(2, 2) - Q(3, 2) - Q(2, 3) + Q(3, 3));
      break;
    case 4:
      k.a = P(1, 1) - P(2, 2);
      k.b = -P(1, 2) + P(2, 1);
      k.c = 0.5 * (Q(1, 1) - Q(4, 1) - Q(1, 4) + Q(4, 4));
      k.d = 0.5 * (-Q(2, 1) + Q(3, 1) - Q(1, 2) + Q(4, 2) + Q(1, 3) - Q(4, 3) + Q(2, 4) - Q(3, 4));
      k.e = 0.5 * (Q(2, 2) - Q(3, 2) - Q(2, 3) + Q(3, 3));
      break;
    default:
      throw Error("hyperbolic case must be in 1..4");
  }
  k.w = k.c + k.e;
  return k;
}

/// Stationarity quartic of p(t) = (a + b t)/sqrt(1-t²) + (w + d t)/(1-t²), t = tanh(mu).
/// Flipping (a, b) -> (-a, -b) for the negative-cosh branch leaves it unchanged.
inline std::array<double, 5> hyperbolic_quartic(const ReducedCoeffs& k) {
  const double a = k.a, b = k.b, d = k.d, w = k.w;
  return {d * d + a * a, 4.0 * w * d + 2.0 * a * b, 4.0 * w * w + 2.0 * d * d - a * a + b * b,
          4.0 * w * d - 2.0 * a * b, d * d - b * b};
}

namespace subproblem_detail {

/// The quartics are homogeneous in the reduced coefficients, so rescaling them
/// leaves the roots unchanged and keeps the squares in range.
inline ReducedCoeffs normalized(ReducedCoeffs k) {
  const double m = std::max({std::abs(k.a), std::abs(k.b), std::abs(k.c), std::abs(k.d), std::abs(k.e), std::abs(k.w)});
  if (m > 0.0 && std::isfinite(m)) {
    k.a /= m; k.b /= m; k.c /= m; k.d /= m; k.e /= m; k.w /= m;
  }
  return k;
}

inline std::vector<double> real_roots_or_empty(const std::array<double, 5>& q) {
  if (q[0] == 0.0 && q[1] == 0.0 && q[2] == 0.0 && q[3] == 0.0 && q[4] == 0.0) return {};
  return solve_quartic(q[0], q[1], q[2], q[3], q[4]);
}

inline void consider(const SubproblemData& sp, const Mat2& v, int case_id, SubproblemSolution& best) {
  const double val = sp.value(v);
  if (std::isfinite(val) && val < best.value) {
    best.v = v;
    best.value = val;
    best.case_id = case_id;
  }
}

}  // namespace subproblem_detail

/// Global minimizer over O(1,1). Every real root of each family's quartic in
/// (-1, 1) is mapped to both branches (cosh > 0 and cosh < 0) and evaluated;
/// each such candidate is feasible, so roots introduced by squaring only cost
/// an extra evaluation.
inline SubproblemSolution solve_hyperbolic_block(const SubproblemData& sp) {
  require(sp.kind == BlockKind::Hyperbolic, "solve_hyperbolic_block: block is not hyperbolic");
  SubproblemSolution best;
  best.v = Mat2::Identity();
  best.value = sp.value(best.v);
  best.case_id = 0;
  constexpr double edge = 1.0 - 1e-12;
  for (int which = 1; which <= 4; ++which) {
    const ReducedCoeffs k = reduce_hyperbolic(sp, which);
    for (double t : subproblem_detail::real_roots_or_empty(hyperbolic_quartic(subproblem_detail::normalized(k)))) {
      if (!(std::abs(t) < edge)) continue;
      const double inv = 1.0 / std::sqrt((1.0 - t) * (1.0 + t));
      for (double sign : {1.0, -1.0}) {
        const Mat2 v = hyperbolic_case_matrix(which, sign * inv, sign * t * inv);
        subproblem_detail::consider(sp, v, which, best);
      }
    }
  }
  return best;
}

/// Coefficients of the reduced objective for V = c A + s B.
inline ReducedCoeffs reduce_linear_family(const SubproblemData& sp, const Mat2& a_mat, const Mat2& b_mat) {
  const Vec4 va = vec_rows(a_mat);
  const Vec4 vb = vec_rows(b_mat);
  const Vec4 vp = vec_rows(sp.pmat);
  ReducedCoeffs k;
  k.a = va.dot(vp);
  k.b = vb.dot(vp);
  k.c = 0.5 * va.dot(sp.qdot * va);
  k.d = 0.5 * (va.dot(sp.qdot * vb) + vb.dot(sp.qdot * va));
  k.e = 0.5 * vb.dot(sp.qdot * vb);
  k.w = k.c + k.e;
  return k;
}

/// Stationarity of a cos + b sin + c cos² + d cos sin + e sin² under the
/// half-angle substitution t = tan(phi/2).
inline std::array<double, 5> orthogonal_quartic(const ReducedCoeffs& k) {
  const double g = 4.0 * (k.e - k.c);
  return {k.d - k.b, -2.0 * k.a - g, -6.0 * k.d, -2.0 * k.a + g, k.b + k.d};
}

/// Global minimizer over O(2): rotations [[c,-s],[s,c]] (case 1) and
/// reflections [[c,s],[s,-c]] (case 2).
inline SubproblemSolution solve_orthogonal_block(const SubproblemData& sp) {
  require(sp.kind == BlockKind::Orthogonal, "solve_orthogonal_block: block is not orthogonal");
  SubproblemSolution best;
  best.v = Mat2::Identity();
  best.value = sp.value(best.v);
  best.case_id = 0;

  Mat2 rot_a, rot_b, ref_a, ref_b;
  rot_a << 1, 0, 0, 1;
  rot_b << 0, -1, 1, 0;
  ref_a << 1, 0, 0, -1;
  ref_b << 0, 1, 1, 0;
  const std::array<std::pair<Mat2, Mat2>, 2> families{{{rot_a, rot_b}, {ref_a, ref_b}}};
  for (int which = 1; which <= 2; ++which) {
    const auto& [fa, fb] = families[static_cast<std::size_t>(which - 1)];
    const ReducedCoeffs k = reduce_linear_family(sp, fa, fb);
    for (double t : subproblem_detail::real_roots_or_empty(orthogonal_quartic(subproblem_detail::normalized(k)))) {
      const double den = 1.0 + t * t;
      const double c = (1.0 - t * t) / den;
      const double s = 2.0 * t / den;
      subproblem_detail::consider(sp, c * fa + s * fb, which, best);
    }
    // phi = pi is the point at infinity of the substitution
    subproblem_detail::consider(sp, -fa, which, best);
  }
  return best;
}

inline SubproblemSolution solve_block(const SubproblemData& sp) {
  return sp.kind == BlockKind::Hyperbolic ? solve_hyperbolic_block(sp) : solve_orthogonal_block(sp);
}

}  // namespace jobcd
