#pragma once

#include <Eigen/Dense>

#include "mpct/banded.hpp"

namespace mpct {

/// Small m x m dense system (m = 2(n_x + n_u) in the tracking problem) with a
/// cached partial-pivoting LU. Built once offline, solved every iteration.
class SmallDense {
 public:
  SmallDense() = default;

  /// Factorizes `matrix`. Throws SingularSmallSystem when the reciprocal
  /// condition estimate drops below `rcond_floor`.
  explicit SmallDense(Eigen::MatrixXd matrix, double rcond_floor = 1e-14);

  Index size() const noexcept { return matrix_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  double rcond() const noexcept { return rcond_; }

  /// Overwrites x with matrix^{-1} x.
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const;
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

  /// P^T L U, for checking the cached factorization against the matrix.
  Eigen::MatrixXd reconstruct() const { return lu_.reconstructedMatrix(); }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double rcond_ = 0.0;
};

}  // namespace mpct
