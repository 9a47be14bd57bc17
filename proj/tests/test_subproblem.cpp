#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace jobcd;
using namespace jobcd::testing;

namespace {

Mat2 j_hyp() {
  Mat2 j;
  j << 1, 0, 0, -1;
  return j;
}

/// ‖Δ‖²_H = tr(Δ^T C Δ D) for H = D ⊗ C.
double h_norm_sq(const Matrix& delta, const Matrix& c, const Matrix& d) {
  return (delta.transpose() * c * delta * d).trace();
}

}  // namespace

TEST(BuildSubproblem, ZeroGradientScalar) {
  const Signature s(4, 2);
  const Matrix x = cs_random_init(s, 1).x();
  const double vs = 2.5, theta = 0.1;
  const SubproblemData sp =
      build_subproblem(x, Matrix(Matrix::Zero(4, 4)), BlockPair::make(s, 0, 3), QSpec::scalar(vs), theta);
  EXPECT_LE((sp.pmat + (vs + theta) * Mat2::Identity()).norm(), 1e-15);
  EXPECT_LE((sp.qdot - (vs + theta) * Mat4::Identity()).norm(), 1e-15);
  EXPECT_EQ(sp.kind, BlockKind::Hyperbolic);
}

TEST(BuildSubproblem, KroneckerIdentityAtIdentity) {
  const Signature s(2, 1);
  const KroneckerH h{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const SubproblemData sp = build_subproblem(Matrix::Identity(2, 2), Matrix(Matrix::Zero(2, 2)), BlockPair::make(s, 0, 1),
                                             QSpec::exact(h), 1e-3);
  EXPECT_LE((sp.qdot - (1.0 + 1e-3) * Mat4::Identity()).norm(), 1e-15);
}

TEST(BuildSubproblem, ExactCurvatureMatchesHNorm) {
  Rng rng(31);
  const Index n = 6;
  const Signature s(n, 3);
  const Matrix x = cs_random_init(s, 4).x() + 0.1 * detail::gaussian(n, n, rng);
  const KroneckerH h{random_symmetric(n, rng), random_symmetric(n, rng)};
  for (int trial = 0; trial < 100; ++trial) {
    const BlockPair b = sample_block(s, rng);
    const Mat4 q = block_curvature(x, b, QSpec::exact(h));
    const Mat2 v = random_mat2(rng);
    const Mat2 e = v - Mat2::Identity();
    // Δ = U_B (V - I) U_B^T X
    Matrix delta = Matrix::Zero(n, n);
    delta.row(b.i) = e(0, 0) * x.row(b.i) + e(0, 1) * x.row(b.j);
    delta.row(b.j) = e(1, 0) * x.row(b.i) + e(1, 1) * x.row(b.j);
    const double lhs = vec_rows(e).dot(q * vec_rows(e));
    const double rhs = h_norm_sq(delta, h.c, h.d);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(BuildSubproblem, LinearTermMatchesGradient) {
  // <V - I, [∇f X^T]_BB> equals <∇f, Δ> for Δ = U_B (V - I) U_B^T X.
  Rng rng(8);
  const Index n = 5;
  const Signature s(n, 2);
  const Matrix x = cs_random_init(s, 2).x();
  const Matrix g = detail::gaussian(n, n, rng);
  const BlockPair b = BlockPair::make(s, 1, 4);
  const SubproblemData sp = build_subproblem(x, g, b, QSpec::scalar(0.0), 1.0);
  const Mat2 e = random_mat2(rng);
  Matrix delta = Matrix::Zero(n, n);
  delta.row(b.i) = e(0, 0) * x.row(b.i) + e(0, 1) * x.row(b.j);
  delta.row(b.j) = e(1, 0) * x.row(b.i) + e(1, 1) * x.row(b.j);
  const Mat2 gx = sp.pmat + Mat2::Identity() * 1.0;  // P = gx - Q̇ vec(I), Q̇ = I
  EXPECT_NEAR((gx.array() * e.array()).sum(), (g.array() * delta.array()).sum(), 1e-12);
}

TEST(BuildSubproblem, RejectsNonPositiveTheta) {
  const Signature s(2, 1);
  EXPECT_THROW(build_subproblem(Matrix::Identity(2, 2), Matrix(Matrix::Zero(2, 2)), BlockPair::make(s, 0, 1),
                                QSpec::scalar(1.0), 0.0),
               Error);
  EXPECT_THROW(build_subproblem(Matrix::Identity(2, 2), Matrix(Matrix::Zero(2, 2)), BlockPair::make(s, 0, 1),
                                QSpec::scalar(1.0), -1.0),
               Error);
}

TEST(ReduceHyperbolic, IdentityCurvatureCaseOne) {
  SubproblemData sp;
  sp.qdot = Mat4::Identity();
  sp.pmat = Mat2::Zero();
  const ReducedCoeffs k = reduce_hyperbolic(sp, 1);
  EXPECT_EQ(k.a, 0.0);
  EXPECT_EQ(k.b, 0.0);
  EXPECT_EQ(k.c, 1.0);
  EXPECT_EQ(k.d, 0.0);
  EXPECT_EQ(k.e, 1.0);
  EXPECT_EQ(k.w, 2.0);
}

TEST(ReduceHyperbolic, LinearTermsOfCasesOneAndTwo) {
  SubproblemData sp;
  sp.qdot = Mat4::Zero();
  sp.pmat << 1, 2, 3, 4;
  const ReducedCoeffs k1 = reduce_hyperbolic(sp, 1);
  EXPECT_EQ(k1.a, 5.0);
  EXPECT_EQ(k1.b, 5.0);
  EXPECT_EQ(k1.c, 0.0);
  EXPECT_EQ(k1.d, 0.0);
  EXPECT_EQ(k1.e, 0.0);
  const ReducedCoeffs k2 = reduce_hyperbolic(sp, 2);
  EXPECT_EQ(k2.a, 5.0);
  EXPECT_EQ(k2.b, -5.0);
}

TEST(ReduceHyperbolic, CoefficientsReproduceObjective) {
  Rng rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const SubproblemData sp = make_subproblem(random_psd4(rng), 0.1, random_mat2(rng), BlockKind::Hyperbolic);
    for (int which = 1; which <= 4; ++which) {
      const ReducedCoeffs k = reduce_hyperbolic(sp, which);
      EXPECT_DOUBLE_EQ(k.w, k.c + k.e);
      for (int r = 0; r < 5; ++r) {
        const double c = nd(rng), s = nd(rng);
        const double reduced = k.a * c + k.b * s + k.c * c * c + k.d * c * s + k.e * s * s;
        EXPECT_NEAR(reduced, sp.value(hyperbolic_case_matrix(which, c, s)), 1e-10 * (1 + std::abs(reduced)));
      }
    }
  }
}

TEST(ReduceHyperbolic, CaseMatricesCoverTheFourComponents) {
  const double c = std::cosh(0.4), s = std::sinh(0.4);
  std::set<std::pair<int, int>> seen;  // (sign of V11, sign of det)
  // Each root is evaluated on both branches (c, s) and (-c, -s).
  for (int which = 1; which <= 4; ++which) {
    for (double sign : {1.0, -1.0}) {
      const Mat2 v = hyperbolic_case_matrix(which, sign * c, sign * s);
      EXPECT_LE(block_feasibility_defect(v, j_hyp()), 1e-14);
      seen.insert({v(0, 0) > 0 ? 1 : -1, v.determinant() > 0 ? 1 : -1});
    }
  }
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_THROW(hyperbolic_case_matrix(5, c, s), Error);
}

TEST(ReduceHyperbolic, WrongKind) {
  SubproblemData sp;
  sp.kind = BlockKind::Orthogonal;
  EXPECT_THROW(reduce_hyperbolic(sp, 1), Error);
  EXPECT_THROW(solve_hyperbolic_block(sp), Error);
  sp.kind = BlockKind::Hyperbolic;
  EXPECT_THROW(solve_orthogonal_block(sp), Error);
}

TEST(HyperbolicQuartic, VanishesAtInteriorStationaryPoint) {
  // Stationary points of g(mu) = a cosh + b sinh + c cosh² + d cosh sinh + e sinh²
  // found by bisection on g'(mu) must be roots of the quartic in t = tanh(mu).
  Rng rng(5);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 30; ++trial) {
    const SubproblemData sp = make_subproblem(random_psd4(rng), 0.1, random_mat2(rng), BlockKind::Hyperbolic);
    const ReducedCoeffs k = reduce_hyperbolic(sp, 1);
    const auto dg = [&](double mu) {
      const double ch = std::cosh(mu), sh = std::sinh(mu);
      return k.a * sh + k.b * ch + 2 * k.c * ch * sh + k.d * (sh * sh + ch * ch) + 2 * k.e * sh * ch;
    };
    double lo = -5, hi = 5;
    if (dg(lo) * dg(hi) > 0) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dg(lo) * dg(mid) <= 0 ? hi : lo) = mid;
    }
    const double t = std::tanh(0.5 * (lo + hi));
    const auto q = hyperbolic_quartic(k);
    double scale = 0.0;
    for (double v : q) scale = std::max(scale, std::abs(v));
    EXPECT_LE(std::abs(poly_eval({q[0], q[1], q[2], q[3], q[4]}, t)), 1e-8 * scale);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(SolveHyperbolic, ZeroLinearTermKeepsIdentity) {
  const SubproblemData sp = make_subproblem(Mat4::Zero(), 0.1, -0.1 * Mat2::Identity(), BlockKind::Hyperbolic);
  const SubproblemSolution sol = solve_hyperbolic_block(sp);
  EXPECT_EQ(sol.case_id, 0);
  EXPECT_EQ(sol.v, Mat2(Mat2::Identity()));
  EXPECT_DOUBLE_EQ(sol.value, sp.value(Mat2::Identity()));
}

TEST(SolveHyperbolic, DiagonalExampleAgainstGrid) {
  const double theta = 0.1;
  const SubproblemData sp =
      make_subproblem(Mat4::Identity(), theta, -3.0 * Mat2::Identity(), BlockKind::Hyperbolic);
  const SubproblemSolution sol = solve_hyperbolic_block(sp);
  const GridTables grid(10.0, 1e-4, 1e-3);
  EXPECT_LE(std::abs(sol.value - hyperbolic_grid_min(sp, grid)), 1e-6);
}

TEST(SolveHyperbolic, RandomInstancesAgainstGrid) {
  const GridTables grid(10.0, 1e-3, 1e-3);
  Rng rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    const SubproblemData sp = make_subproblem(random_psd4(rng), 0.1, random_mat2(rng), BlockKind::Hyperbolic);
    const SubproblemSolution sol = solve_hyperbolic_block(sp);
    EXPECT_LE(sol.value, hyperbolic_grid_min(sp, grid) + 1e-6) << "trial " << trial;
    EXPECT_LE(sol.value, sp.value(Mat2::Identity()));
    EXPECT_NEAR(sol.value, sp.value(sol.v), 1e-12 * (1 + std::abs(sol.value)));
    EXPECT_LE(block_feasibility_defect(sol.v, j_hyp()), 1e-10 * std::max(1.0, sol.v.squaredNorm()));
  }
}

TEST(SolveHyperbolic, RescaledDataGivesSameStep) {
  Rng rng(99);
  const SubproblemData sp = make_subproblem(random_psd4(rng), 0.1, random_mat2(rng), BlockKind::Hyperbolic);
  SubproblemData big = sp;
  big.qdot *= 1e200;
  big.pmat *= 1e200;
  const SubproblemSolution a = solve_hyperbolic_block(sp);
  const SubproblemSolution b = solve_hyperbolic_block(big);
  EXPECT_EQ(a.case_id, b.case_id);
  EXPECT_LE((a.v - b.v).norm(), 1e-8 * (1 + a.v.norm()));
}

TEST(SolveOrthogonal, ZeroLinearTermKeepsIdentity) {
  const SubproblemData sp = make_subproblem(Mat4::Zero(), 0.1, -0.1 * Mat2::Identity(), BlockKind::Orthogonal);
  const SubproblemSolution sol = solve_orthogonal_block(sp);
  EXPECT_EQ(sol.case_id, 0);
  EXPECT_EQ(sol.v, Mat2(Mat2::Identity()));
}

TEST(SolveOrthogonal, SkewLinearTermPicksRotation) {
  Mat2 p;
  p << 0, 1, -1, 0;
  const SubproblemData sp = make_subproblem(Mat4::Zero(), 0.1, p - 0.1 * Mat2::Identity(), BlockKind::Orthogonal);
  const SubproblemSolution sol = solve_orthogonal_block(sp);
  EXPECT_EQ(sol.case_id, 1);
  EXPECT_NEAR(sol.v.determinant(), 1.0, 1e-12);
  const GridTables grid(1.0, 1.0, 1e-5);
  EXPECT_LE(std::abs(sol.value - orthogonal_grid_min(sp, grid)), 1e-6);
}

TEST(SolveOrthogonal, RandomInstancesAgainstGrid) {
  const GridTables grid(1.0, 1.0, 1e-4);
  Rng rng(1618);
  for (int trial = 0; trial < 200; ++trial) {
    const SubproblemData sp = make_subproblem(random_psd4(rng), 0.1, random_mat2(rng), BlockKind::Orthogonal);
    const SubproblemSolution sol = solve_orthogonal_block(sp);
    EXPECT_LE(sol.value, orthogonal_grid_min(sp, grid) + 1e-6) << "trial " << trial;
    EXPECT_LE(sol.value, sp.value(Mat2::Identity()));
    EXPECT_LE(block_feasibility_defect(sol.v, Mat2::Identity()), 1e-10);
  }
}

TEST(SolveOrthogonal, HalfTurnCandidate) {
  // P = +k I with small curvature favours V = -I (phi = pi), the point the
  // half-angle substitution cannot reach.
  const SubproblemData sp = make_subproblem(Mat4::Zero(), 0.1, 2.0 * Mat2::Identity(), BlockKind::Orthogonal);
  const SubproblemSolution sol = solve_orthogonal_block(sp);
  EXPECT_LE((sol.v + Mat2::Identity()).norm(), 1e-10);
}

TEST(ReduceLinearFamily, MatchesDirectEvaluation) {
  Rng rng(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  const SubproblemData sp = make_subproblem(random_psd4(rng), 0.2, random_mat2(rng), BlockKind::Orthogonal);
  const Mat2 a = random_mat2(rng), b = random_mat2(rng);
  const ReducedCoeffs k = reduce_linear_family(sp, a, b);
  for (int r = 0; r < 10; ++r) {
    const double c = nd(rng), s = nd(rng);
    EXPECT_NEAR(k.a * c + k.b * s + k.c * c * c + k.d * c * s + k.e * s * s, sp.value(c * a + s * b), 1e-10);
  }
  for (int which = 1; which <= 4; ++which) {
    SubproblemData h = sp;
    h.kind = BlockKind::Hyperbolic;
    const ReducedCoeffs lit = reduce_hyperbolic(h, which);
    const ReducedCoeffs gen = reduce_linear_family(h, hyperbolic_case_matrix(which, 1, 0), hyperbolic_case_matrix(which, 0, 1));
    EXPECT_NEAR(lit.a, gen.a, 1e-12);
    EXPECT_NEAR(lit.b, gen.b, 1e-12);
    EXPECT_NEAR(lit.c, gen.c, 1e-12);
    EXPECT_NEAR(lit.d, gen.d, 1e-12);
    EXPECT_NEAR(lit.e, gen.e, 1e-12);
  }
}

TEST(SolveBlock, DispatchesOnKind) {
  Rng rng(12);
  const Signature s(4, 2);
  const Matrix x = cs_random_init(s, 3).x();
  const Matrix g = detail::gaussian(4, 4, rng);
  for (auto [a, b] : {std::pair<Index, Index>{0, 2}, {0, 1}, {2, 3}}) {
    const BlockPair bp = BlockPair::make(s, a, b);
    const SubproblemSolution sol = solve_block(build_subproblem(x, g, bp, QSpec::scalar(5.0), 0.1));
    EXPECT_LE(block_feasibility_defect(sol.v, bp.j_block(s)), 1e-10 * std::max(1.0, sol.v.squaredNorm()));
  }
}

TEST(SolveBlock, UnsortedSignatureBlock) {
  Vector d(3);
  d << -1, 1, -1;
  const Signature s = Signature::from_diagonal(d);
  Rng rng(13);
  const Matrix g = detail::gaussian(3, 3, rng);
  const BlockPair bp = BlockPair::make(s, 0, 1);
  ASSERT_EQ(bp.kind, BlockKind::Hyperbolic);
  const SubproblemSolution sol = solve_block(build_subproblem(Matrix::Identity(3, 3), g, bp, QSpec::scalar(2.0), 0.1));
  EXPECT_NE(sol.case_id, 0);
  EXPECT_LE(block_feasibility_defect(sol.v, bp.j_block(s)), 1e-10 * std::max(1.0, sol.v.squaredNorm()));
}
