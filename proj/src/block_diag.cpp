#include "mpct/block_diag.hpp"

#include <algorithm>
#include <cmath>

#include "mpct/error.hpp"

namespace mpct {

Index BlockDiagMatrix::size() const {
  Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  return n;
}

Eigen::MatrixXd BlockDiagMatrix::to_dense() const {
  const Index n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

bool dense_cholesky(const Eigen::MatrixXd& A, double pivot_floor,
                    Eigen::MatrixXd& lower, Index& failed_row) {
  const Index n = A.rows();
  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A(i, i)));
  const double floor = pivot_floor * max_diag;

  lower = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = A(j, j);
    for (Index k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (!(d > floor) || !std::isfinite(d)) {
      failed_row = j;
      return false;
    }
    const double ljj = std::sqrt(d);
    lower(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

BlockDiagFactor block_diag_factor(const BlockDiagMatrix& M, double pivot_floor,
                                  const char* name) {
  BlockDiagFactor F;
  F.factors_.reserve(M.blocks.size());
  F.offsets_.reserve(M.blocks.size());
  Index off = 0;
  for (std::size_t b = 0; b < M.blocks.size(); ++b) {
    const auto& block = M.blocks[b];
    if (block.rows() != block.cols() || block.rows() == 0) {
      throw DimensionMismatch("block-diagonal: block " + std::to_string(b) +
                              " is not square and non-empty");
    }
    Eigen::MatrixXd lower;
    Index failed = 0;
    if (!dense_cholesky(block, pivot_floor, lower, failed)) {
      throw NotPositiveDefinite(name, static_cast<std::ptrdiff_t>(b), failed);
    }
    F.factors_.push_back(std::move(lower));
    F.offsets_.push_back(off);
    off += block.rows();
  }
  F.size_ = off;
  return F;
}

BlockDiagFactor BlockDiagFactor::from_factors(std::vector<Eigen::MatrixXd> factors) {
  BlockDiagFactor F;
  Index off = 0;
  for (std::size_t b = 0; b < factors.size(); ++b) {
    const auto& L = factors[b];
    if (L.rows() != L.cols() || L.rows() == 0) {
      throw DimensionMismatch("block-diagonal factor: block " + std::to_string(b));
    }
    for (Index i = 0; i < L.rows(); ++i) {
      if (!(L(i, i) > 0.0)) {
        throw NotPositiveDefinite("block-diagonal factor", static_cast<std::ptrdiff_t>(b), i);
      }
    }
    F.offsets_.push_back(off);
    off += L.rows();
  }
  F.factors_ = std::move(factors);
  F.size_ = off;
  return F;
}

void BlockDiagFactor::solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
  if (x.size() != size_) throw DimensionMismatch("block-diagonal solve: vector size");
  for (std::size_t b = 0; b < factors_.size(); ++b) {
    const auto& L = factors_[b];
    auto seg = x.segment(offsets_[b], L.rows());
    L.triangularView<Eigen::Lower>().solveInPlace(seg);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(seg);
  }
}

void BlockDiagFactor::solve_columns_in_place(Eigen::Ref<Eigen::MatrixXd> X) const {
  if (X.rows() != size_) throw DimensionMismatch("block-diagonal solve: matrix rows");
  for (std::size_t b = 0; b < factors_.size(); ++b) {
    const auto& L = factors_[b];
    auto rows = X.middleRows(offsets_[b], L.rows());
    L.triangularView<Eigen::Lower>().solveInPlace(rows);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(rows);
  }
}

Eigen::MatrixXd BlockDiagFactor::reconstruct() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size_, size_);
  for (std::size_t b = 0; b < factors_.size(); ++b) {
    const auto& L = factors_[b];
    out.block(offsets_[b], offsets_[b], L.rows(), L.rows()) = L * L.transpose();
  }
  return out;
}

Eigen::VectorXd block_diag_solve(const BlockDiagFactor& F,
                                 const Eigen::Ref<const Eigen::VectorXd>& d) {
  if (d.size() != F.size()) throw DimensionMismatch("block-diagonal solve: vector size");
  Eigen::VectorXd x = d;
  F.solve_in_place(x);
  return x;
}

}  // namespace mpct
