#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jobcd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using RowPair = Eigen::Matrix<double, 2, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Raised for contract violations (bad dimensions, infeasible inputs, bad config).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

/// Diagonal +-1 matrix J. Canonical form puts the p positive entries first.
class Signature {
 public:
  Signature() = default;

  /// Canonical signature diag(I_p, -I_{n-p}).
  Signature(Index n, Index p) : diag_(n) {
    require(n >= 1, "signature dimension must be positive");
    require(p >= 0 && p <= n, "signature requires 0 <= p <= n");
    for (Index k = 0; k < n; ++k) diag_(k) = k < p ? 1.0 : -1.0;
  }

  /// Arbitrary-order signature; every entry must be exactly +1 or -1.
  static Signature from_diagonal(const Vector& diag) {
    Signature s;
    require(diag.size() >= 1, "signature dimension must be positive");
    for (Index k = 0; k < diag.size(); ++k)
      require(diag(k) == 1.0 || diag(k) == -1.0, "signature entries must be +1 or -1");
    s.diag_ = diag;
    return s;
  }

  Index n() const { return diag_.size(); }
  Index p() const { return (diag_.array() > 0.0).count(); }
  Index q() const { return n() - p(); }
  double operator()(Index k) const { return diag_(k); }
  const Vector& diagonal() const { return diag_; }
  Matrix dense() const { return diag_.asDiagonal(); }

  bool canonical() const {
    for (Index k = 1; k < n(); ++k)
      if (diag_(k) > diag_(k - 1)) return false;
    return true;
  }

  /// ⟨x, y⟩ under this signature.
  double inner(const Vector& x, const Vector& y) const {
    return (x.array() * diag_.array() * y.array()).sum();
  }

 private:
  Vector diag_;
};

/// Curvature H = D ⊗ C of a quadratic upper model, ‖Δ‖²_H = tr(Δ^T C Δ D).
struct KroneckerH {
  Matrix c;
  Matrix d;
};

enum class BlockKind { Hyperbolic, Orthogonal };

inline const char* to_string(BlockKind k) {
  return k == BlockKind::Hyperbolic ? "hyperbolic" : "orthogonal";
}

/// Row pair (i, j), i < j, updated jointly by one block step.
struct BlockPair {
  Index i = 0;
  Index j = 1;
  BlockKind kind = BlockKind::Hyperbolic;

  static BlockPair make(const Signature& sig, Index a, Index b) {
    require(a != b, "block indices must differ");
    require(a >= 0 && b >= 0 && a < sig.n() && b < sig.n(), "block index out of range");
    BlockPair bp;
    bp.i = a < b ? a : b;
    bp.j = a < b ? b : a;
    bp.kind = sig(bp.i) != sig(bp.j) ? BlockKind::Hyperbolic : BlockKind::Orthogonal;
    return bp;
  }

  /// J restricted to the block, diag(J_ii, J_jj).
  Mat2 j_block(const Signature& sig) const {
    Mat2 m = Mat2::Zero();
    m(0, 0) = sig(i);
    m(1, 1) = sig(j);
    return m;
  }

  friend bool operator==(const BlockPair& a, const BlockPair& b) {
    return a.i == b.i && a.j == b.j && a.kind == b.kind;
  }
};

/// n/2 disjoint pairs covering every row exactly once.
class BlockGrouping {
 public:
  BlockGrouping() = default;

  BlockGrouping(const Signature& sig, std::vector<BlockPair> pairs) : pairs_(std::move(pairs)) {
    const Index n = sig.n();
    require(n % 2 == 0, "n must be even");
    require(static_cast<Index>(pairs_.size()) * 2 == n, "grouping must contain n/2 pairs");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& bp : pairs_) {
      for (Index r : {bp.i, bp.j}) {
        require(r >= 0 && r < n, "grouping index out of range");
        require(!seen[static_cast<std::size_t>(r)], "grouping pairs must be disjoint");
        seen[static_cast<std::size_t>(r)] = true;
      }
    }
  }

  const std::vector<BlockPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<BlockPair> pairs_;
};

}  // namespace jobcd
