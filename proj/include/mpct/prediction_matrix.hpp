#pragma once

#include <Eigen/Dense>

#include "mpct/banded.hpp"

namespace mpct {

/// Equality-constraint matrix G of the tracking problem, kept as its block
/// pattern. With z = (x_0, u_0, ..., x_{N-1}, u_{N-1}, x_s, u_s) the rows of
/// G z are
///
///   x_0
///   A x_{k-1} + B u_{k-1} - x_k        k = 1..N, where x_N means x_s
///   (A - I) x_s + B u_s
///
/// so G is (N+2) n_x by (N+1)(n_x+n_u). No dense copy is ever formed.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  PredictionMatrix(Eigen::MatrixXd A, Eigen::MatrixXd B, Index horizon);

  Index state_dim() const noexcept { return nx_; }
  Index input_dim() const noexcept { return nu_; }
  Index horizon() const noexcept { return N_; }
  Index rows() const noexcept { return (N_ + 2) * nx_; }
  Index cols() const noexcept { return (N_ + 1) * (nx_ + nu_); }

  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::MatrixXd& B() const noexcept { return B_; }

  /// y = G x. Throws DimensionMismatch.
  void multiply(const Eigen::Ref<const Eigen::VectorXd>& x,
                Eigen::Ref<Eigen::VectorXd> y) const;
  /// x = G^T y. Throws DimensionMismatch.
  void multiply_transpose(const Eigen::Ref<const Eigen::VectorXd>& y,
                          Eigen::Ref<Eigen::VectorXd> x) const;

  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd multiply_transpose(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Column-wise products for the offline phase.
  Eigen::MatrixXd multiply_columns(const Eigen::MatrixXd& X) const;

 private:
  Index nx_ = 0;
  Index nu_ = 0;
  Index N_ = 0;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd A_minus_I_;
};

}  // namespace mpct
