#include "mpct/prediction_matrix.hpp"

#include "mpct/error.hpp"

namespace mpct {

PredictionMatrix::PredictionMatrix(Eigen::MatrixXd A, Eigen::MatrixXd B, Index horizon)
    : nx_(A.rows()), nu_(B.cols()), N_(horizon), A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() != A_.cols() || B_.rows() != nx_ || nx_ == 0 || nu_ == 0) {
    throw DimensionMismatch("prediction matrix: A must be n_x x n_x and B n_x x n_u");
  }
  if (N_ < 2) throw Error(ErrorCode::InvalidArgument, "prediction horizon must be >= 2");
  A_minus_I_ = A_ - Eigen::MatrixXd::Identity(nx_, nx_);
}

void PredictionMatrix::multiply(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> y) const {
  if (x.size() != cols() || y.size() != rows()) {
    throw DimensionMismatch("G x: expected x of size " + std::to_string(cols()) +
                            " and y of size " + std::to_string(rows()));
  }
  const Index nxu = nx_ + nu_;
  y.head(nx_) = x.head(nx_);
  for (Index k = 1; k <= N_; ++k) {
    const Index prev = (k - 1) * nxu;
    auto row = y.segment(k * nx_, nx_);
    row.noalias() = A_ * x.segment(prev, nx_);
    row.noalias() += B_ * x.segment(prev + nx_, nu_);
    row -= x.segment(k * nxu, nx_);
  }
  const Index s = N_ * nxu;
  auto last = y.segment((N_ + 1) * nx_, nx_);
  last.noalias() = A_minus_I_ * x.segment(s, nx_);
  last.noalias() += B_ * x.segment(s + nx_, nu_);
}

void PredictionMatrix::multiply_transpose(const Eigen::Ref<const Eigen::VectorXd>& y,
                                          Eigen::Ref<Eigen::VectorXd> x) const {
  if (y.size() != rows() || x.size() != cols()) {
    throw DimensionMismatch("G^T y: expected y of size " + std::to_string(rows()) +
                            " and x of size " + std::to_string(cols()));
  }
  const Index nxu = nx_ + nu_;
  // Stage k (0..N-1) is touched by row block k (identity or -I) and row
  // block k+1 (A, B).
  for (Index k = 0; k < N_; ++k) {
    const Index off = k * nxu;
    const auto next = y.segment((k + 1) * nx_, nx_);
    auto xs = x.segment(off, nx_);
    xs.noalias() = A_.transpose() * next;
    if (k == 0) {
      xs += y.head(nx_);
    } else {
      xs -= y.segment(k * nx_, nx_);
    }
    x.segment(off + nx_, nu_).noalias() = B_.transpose() * next;
  }
  const Index s = N_ * nxu;
  const auto tail = y.segment((N_ + 1) * nx_, nx_);
  auto xs = x.segment(s, nx_);
  xs.noalias() = A_minus_I_.transpose() * tail;
  xs -= y.segment(N_ * nx_, nx_);
  x.segment(s + nx_, nu_).noalias() = B_.transpose() * tail;
}

Eigen::VectorXd PredictionMatrix::multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd y(rows());
  multiply(x, y);
  return y;
}

Eigen::VectorXd PredictionMatrix::multiply_transpose(
    const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::VectorXd x(cols());
  multiply_transpose(y, x);
  return x;
}

Eigen::MatrixXd PredictionMatrix::multiply_columns(const Eigen::MatrixXd& X) const {
  if (X.rows() != cols()) throw DimensionMismatch("G X: row count");
  Eigen::MatrixXd Y(rows(), X.cols());
  for (Index c = 0; c < X.cols(); ++c) {
    Eigen::VectorXd col = Y.col(c);
    multiply(X.col(c), col);
    Y.col(c) = col;
  }
  return Y;
}

}  // namespace mpct
