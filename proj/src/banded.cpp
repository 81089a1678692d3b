#include "mpct/banded.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mpct/error.hpp"

namespace mpct {

SymBandedMatrix::SymBandedMatrix(Index n, Index half_bandwidth)
    : n_(n), bw_(half_bandwidth) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "banded matrix size must be positive");
  if (half_bandwidth < 0 || half_bandwidth >= n) {
    throw Error(ErrorCode::InvalidArgument,
                "half bandwidth must satisfy 0 <= bw < n (bw=" +
                    std::to_string(half_bandwidth) + ", n=" + std::to_string(n) + ")");
  }
  bands_.assign(static_cast<std::size_t>(n * (bw_ + 1)), 0.0);
}

SymBandedMatrix SymBandedMatrix::from_dense(const Eigen::MatrixXd& dense,
                                            Index half_bandwidth) {
  if (dense.rows() != dense.cols()) {
    throw DimensionMismatch("banded matrix from non-square dense matrix");
  }
  SymBandedMatrix M(dense.rows(), half_bandwidth);
  for (Index j = 0; j < M.n_; ++j) {
    const Index last = std::min(M.n_ - 1, j + M.bw_);
    for (Index i = j; i <= last; ++i) M.lower(i, j) = dense(i, j);
  }
  return M;
}

double SymBandedMatrix::operator()(Index i, Index j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return bands_[slot(i, j)];
}

Eigen::MatrixXd SymBandedMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
  for (Index j = 0; j < n_; ++j) {
    const Index last = std::min(n_ - 1, j + bw_);
    for (Index i = j; i <= last; ++i) {
      out(i, j) = bands_[slot(i, j)];
      out(j, i) = out(i, j);
    }
  }
  return out;
}

Eigen::VectorXd SymBandedMatrix::multiply(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw DimensionMismatch("banded multiply: vector size");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (Index j = 0; j < n_; ++j) {
    const double* col = bands_.data() + j * (bw_ + 1);
    y[j] += col[0] * x[j];
    const Index last = std::min(n_ - 1, j + bw_);
    for (Index i = j + 1; i <= last; ++i) {
      const double a = col[i - j];
      y[i] += a * x[j];
      y[j] += a * x[i];
    }
  }
  return y;
}

double BandedCholeskyFactor::operator()(Index i, Index j) const {
  if (i < j || i - j > bw_) return 0.0;
  return bands_[static_cast<std::size_t>(j * (bw_ + 1) + (i - j))];
}

Eigen::MatrixXd BandedCholeskyFactor::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
  for (Index j = 0; j < n_; ++j) {
    const Index last = std::min(n_ - 1, j + bw_);
    for (Index i = j; i <= last; ++i) out(i, j) = (*this)(i, j);
  }
  return out;
}

BandedCholeskyFactor BandedCholeskyFactor::from_bands(Index n, Index half_bandwidth,
                                                      std::vector<double> bands) {
  if (n <= 0 || half_bandwidth < 0 || half_bandwidth >= n ||
      bands.size() != static_cast<std::size_t>(n * (half_bandwidth + 1))) {
    throw DimensionMismatch("banded factor: band storage size");
  }
  for (Index j = 0; j < n; ++j) {
    const double d = bands[static_cast<std::size_t>(j * (half_bandwidth + 1))];
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NotPositiveDefinite("banded factor", -1, j);
    }
  }
  BandedCholeskyFactor L;
  L.n_ = n;
  L.bw_ = half_bandwidth;
  L.bands_ = std::move(bands);
  return L;
}

BandedCholeskyFactor banded_cholesky_factor(const SymBandedMatrix& M,
                                            double pivot_floor) {
  const Index n = M.size();
  const Index bw = M.half_bandwidth();
  const Index stride = bw + 1;

  double max_diag = 0.0;
  for (Index j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(M.lower(j, j)));
  const double floor = pivot_floor * max_diag;

  BandedCholeskyFactor L;
  L.n_ = n;
  L.bw_ = bw;
  L.bands_ = M.bands();
  double* a = L.bands_.data();

  // Right-looking column algorithm restricted to the band: once column j is
  // final, it updates the trailing (bw x bw) lower triangle it touches.
  for (Index j = 0; j < n; ++j) {
    double* col = a + j * stride;
    const double pivot = col[0];
    if (!(pivot > floor) || !std::isfinite(pivot)) {
      throw NotPositiveDefinite("banded", -1, j);
    }
    const double ljj = std::sqrt(pivot);
    col[0] = ljj;
    const Index last = std::min(n - 1, j + bw);
    for (Index i = j + 1; i <= last; ++i) col[i - j] /= ljj;
    for (Index k = j + 1; k <= last; ++k) {
      const double lkj = col[k - j];
      if (lkj == 0.0) continue;
      double* target = a + k * stride;
      for (Index i = k; i <= last; ++i) target[i - k] -= col[i - j] * lkj;
    }
  }
  return L;
}

void BandedCholeskyFactor::solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
  if (x.size() != n_) throw DimensionMismatch("banded solve: vector size");
  const Index stride = bw_ + 1;
  const double* a = bands_.data();
  // L y = d
  for (Index j = 0; j < n_; ++j) {
    const double* col = a + j * stride;
    const double yj = x[j] / col[0];
    x[j] = yj;
    const Index last = std::min(n_ - 1, j + bw_);
    for (Index i = j + 1; i <= last; ++i) x[i] -= col[i - j] * yj;
  }
  // L^T x = y
  for (Index j = n_ - 1; j >= 0; --j) {
    const double* col = a + j * stride;
    double s = x[j];
    const Index last = std::min(n_ - 1, j + bw_);
    for (Index i = j + 1; i <= last; ++i) s -= col[i - j] * x[i];
    x[j] = s / col[0];
  }
}

void BandedCholeskyFactor::solve_columns_in_place(Eigen::Ref<Eigen::MatrixXd> X) const {
  if (X.rows() != n_) throw DimensionMismatch("banded solve: matrix rows");
  for (Index c = 0; c < X.cols(); ++c) {
    Eigen::VectorXd col = X.col(c);
    solve_in_place(col);
    X.col(c) = col;
  }
}

Eigen::VectorXd banded_solve(const BandedCholeskyFactor& L,
                             const Eigen::Ref<const Eigen::VectorXd>& d) {
  if (d.size() != L.size()) throw DimensionMismatch("banded solve: vector size");
  Eigen::VectorXd x = d;
  L.solve_in_place(x);
  return x;
}

}  // namespace mpct
