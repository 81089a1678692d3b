#pragma once

#include <concepts>
#include <utility>

#include <Eigen/Dense>

#include "mpct/banded.hpp"
#include "mpct/block_diag.hpp"
#include "mpct/error.hpp"
#include "mpct/small_dense.hpp"

namespace mpct {

/// Structured solver for the banded part Gamma of a semi-banded matrix.
template <class G>
concept GammaSolver = requires(const G& g, Eigen::VectorXd& x, Eigen::MatrixXd& X) {
  { g.size() } -> std::convertible_to<Index>;
  g.solve_in_place(x);
  g.solve_columns_in_place(X);
};

/// Low-rank pair (U, V) of a semi-banded matrix, U n x m and V m x n.
template <class F>
concept LowRankFactors = requires(const F& f, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
  { f.size() } -> std::convertible_to<Index>;
  { f.rank() } -> std::convertible_to<Index>;
  f.apply_u(in, out);
  f.apply_v(in, out);
  { f.dense_u() } -> std::convertible_to<Eigen::MatrixXd>;
  { f.dense_v() } -> std::convertible_to<Eigen::MatrixXd>;
};

/// Plain dense U and V.
struct DenseLowRank {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;

  Index size() const noexcept { return U.rows(); }
  Index rank() const noexcept { return U.cols(); }
  void apply_u(const Eigen::Ref<const Eigen::VectorXd>& z2, Eigen::Ref<Eigen::VectorXd> out) const {
    out.noalias() = U * z2;
  }
  void apply_v(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const {
    out.noalias() = V * x;
  }
  Eigen::MatrixXd dense_u() const { return U; }
  Eigen::MatrixXd dense_v() const { return V; }
};

/// Scratch vectors for one semi-banded solve. Size once with `resize` and reuse
/// across calls to keep the iteration allocation free.
struct SemiBandedWorkspace {
  Eigen::VectorXd small;   // z2, length m
  Eigen::VectorXd lifted;  // U z2 then z3, length n

  void resize(Index n, Index m) {
    small.resize(m);
    lifted.resize(n);
  }
};

/// Semi-banded matrix M = Gamma + U V with Gamma factored and the small
/// m x m matrix (I + V Gamma^{-1} U) factored.
template <GammaSolver Gamma, LowRankFactors Factors>
class SemiBandedSystem {
 public:
  SemiBandedSystem() = default;

  /// Forms Gamma^{-1} U with m structured solves and factorizes
  /// I + V Gamma^{-1} U. Throws SingularSmallSystem when M is singular.
  SemiBandedSystem(Gamma gamma, Factors factors)
      : gamma_(std::move(gamma)), factors_(std::move(factors)) {
    if (factors_.size() != gamma_.size()) {
      throw DimensionMismatch("semi-banded system: U/V do not match Gamma");
    }
    Eigen::MatrixXd gamma_inv_u = factors_.dense_u();
    gamma_.solve_columns_in_place(gamma_inv_u);
    const Index m = factors_.rank();
    Eigen::MatrixXd small = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd col(m);
    for (Index c = 0; c < m; ++c) {
      factors_.apply_v(gamma_inv_u.col(c), col);
      small.col(c) += col;
    }
    small_ = SmallDense(std::move(small));
  }

  /// Rebuilds a system from cached pieces without refactoring.
  SemiBandedSystem(Gamma gamma, Factors factors, SmallDense small)
      : gamma_(std::move(gamma)), factors_(std::move(factors)), small_(std::move(small)) {
    if (factors_.size() != gamma_.size() || small_.size() != factors_.rank()) {
      throw DimensionMismatch("semi-banded system: cached pieces disagree");
    }
  }

  Index size() const { return gamma_.size(); }
  Index rank() const { return factors_.rank(); }
  const Gamma& gamma() const noexcept { return gamma_; }
  const Factors& factors() const noexcept { return factors_; }
  const SmallDense& small() const noexcept { return small_; }

  SemiBandedWorkspace make_workspace() const {
    SemiBandedWorkspace ws;
    ws.resize(size(), rank());
    return ws;
  }

  /// x <- (Gamma + U V)^{-1} x.
  ///   z1 = Gamma^{-1} d
  ///   (I + V Gamma^{-1} U) z2 = V z1
  ///   z3 = Gamma^{-1} (U z2)
  ///   x  = z1 - z3
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x, SemiBandedWorkspace& ws) const {
    if (x.size() != size()) throw DimensionMismatch("semi-banded solve: vector size");
    if (ws.small.size() != rank() || ws.lifted.size() != size()) ws.resize(size(), rank());
    gamma_.solve_in_place(x);
    factors_.apply_v(x, ws.small);
    small_.solve_in_place(ws.small);
    factors_.apply_u(ws.small, ws.lifted);
    gamma_.solve_in_place(ws.lifted);
    x -= ws.lifted;
  }

  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& d) const {
    auto ws = make_workspace();
    Eigen::VectorXd x = d;
    solve_in_place(x, ws);
    return x;
  }

 private:
  Gamma gamma_;
  Factors factors_;
  SmallDense small_;
};

/// Semi-banded system whose Gamma is a banded Cholesky factor and whose U, V
/// are dense. The form used for W.
using BandedSemiSystem = SemiBandedSystem<BandedCholeskyFactor, DenseLowRank>;

/// Out-of-place convenience wrapper around SemiBandedSystem::solve_in_place.
template <GammaSolver Gamma, LowRankFactors Factors>
Eigen::VectorXd solve_semibanded(const SemiBandedSystem<Gamma, Factors>& sys,
                                 const Eigen::Ref<const Eigen::VectorXd>& d,
                                 SemiBandedWorkspace& ws) {
  Eigen::VectorXd x = d;
  sys.solve_in_place(x, ws);
  return x;
}

}  // namespace mpct
