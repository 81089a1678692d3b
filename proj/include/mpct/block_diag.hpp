#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mpct/banded.hpp"

namespace mpct {

/// Block-diagonal symmetric matrix made of small dense blocks.
struct BlockDiagMatrix {
  std::vector<Eigen::MatrixXd> blocks;

  Index size() const;
  Eigen::MatrixXd to_dense() const;
};

/// Per-block lower Cholesky factors of a BlockDiagMatrix.
class BlockDiagFactor {
 public:
  BlockDiagFactor() = default;

  Index size() const noexcept { return size_; }
  std::size_t block_count() const noexcept { return factors_.size(); }
  const Eigen::MatrixXd& block_factor(std::size_t b) const { return factors_[b]; }
  Index block_offset(std::size_t b) const { return offsets_[b]; }

  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const;
  void solve_columns_in_place(Eigen::Ref<Eigen::MatrixXd> X) const;

  /// Dense reconstruction of the factored matrix (L L^T per block).
  Eigen::MatrixXd reconstruct() const;

  static BlockDiagFactor from_factors(std::vector<Eigen::MatrixXd> factors);

 private:
  friend BlockDiagFactor block_diag_factor(const BlockDiagMatrix&, double,
                                           const char*);

  Index size_ = 0;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<Index> offsets_;
};

/// Cholesky-factors every block. Throws NotPositiveDefinite(name, block, row)
/// when a pivot falls below pivot_floor times the block's largest diagonal.
BlockDiagFactor block_diag_factor(const BlockDiagMatrix& M,
                                  double pivot_floor = kDefaultPivotFloor,
                                  const char* name = "block-diagonal");

Eigen::VectorXd block_diag_solve(const BlockDiagFactor& F,
                                 const Eigen::Ref<const Eigen::VectorXd>& d);

/// Dense lower Cholesky of a single small SPD matrix with the same pivot rule.
/// Reports the failing row through `failed_row` and returns false instead of
/// throwing.
bool dense_cholesky(const Eigen::MatrixXd& A, double pivot_floor,
                    Eigen::MatrixXd& lower, Index& failed_row);

}  // namespace mpct
