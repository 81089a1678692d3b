#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mpct {

using Index = Eigen::Index;

/// Symmetric banded matrix in packed lower-band column storage.
///
/// Column j keeps entries (j, j), (j+1, j), ..., (j+bw, j) contiguously, so
/// entry (i, j) with 0 <= i - j <= bw lives at bands[j * (bw + 1) + (i - j)].
/// Slots that fall past the last row are kept as zero padding.
class SymBandedMatrix {
 public:
  SymBandedMatrix() = default;
  SymBandedMatrix(Index n, Index half_bandwidth);

  /// Copies the lower band of a dense symmetric matrix. Entries outside the
  /// band are ignored; the caller asserts they are zero.
  static SymBandedMatrix from_dense(const Eigen::MatrixXd& dense,
                                    Index half_bandwidth);

  Index size() const noexcept { return n_; }
  Index half_bandwidth() const noexcept { return bw_; }

  bool in_band(Index i, Index j) const noexcept {
    const Index d = i >= j ? i - j : j - i;
    return d <= bw_;
  }

  /// Mutable access to a lower-band entry (i >= j, i - j <= bw).
  double& lower(Index i, Index j) { return bands_[slot(i, j)]; }
  double lower(Index i, Index j) const { return bands_[slot(i, j)]; }

  /// Symmetric read access, zero outside the band.
  double operator()(Index i, Index j) const;

  Eigen::MatrixXd to_dense() const;

  /// y = M x using the symmetric band only.
  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const std::vector<double>& bands() const noexcept { return bands_; }

 private:
  std::size_t slot(Index i, Index j) const noexcept {
    return static_cast<std::size_t>(j * (bw_ + 1) + (i - j));
  }

  Index n_ = 0;
  Index bw_ = 0;
  std::vector<double> bands_;

  friend class BandedCholeskyFactor;
};

/// Lower-triangular Cholesky factor L of a SymBandedMatrix, M = L L^T, stored
/// in the same packed layout. Immutable after construction.
class BandedCholeskyFactor {
 public:
  BandedCholeskyFactor() = default;

  Index size() const noexcept { return n_; }
  Index half_bandwidth() const noexcept { return bw_; }

  double operator()(Index i, Index j) const;
  Eigen::MatrixXd to_dense() const;

  /// Overwrites x with M^{-1} x (forward then backward substitution).
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const;

  /// Solves every column of X in place.
  void solve_columns_in_place(Eigen::Ref<Eigen::MatrixXd> X) const;

  const std::vector<double>& bands() const noexcept { return bands_; }

  /// Rebuilds a factor from previously exported bands. No validation beyond
  /// sizes and a strictly positive diagonal.
  static BandedCholeskyFactor from_bands(Index n, Index half_bandwidth,
                                         std::vector<double> bands);

 private:
  friend BandedCholeskyFactor banded_cholesky_factor(const SymBandedMatrix&,
                                                     double);

  Index n_ = 0;
  Index bw_ = 0;
  std::vector<double> bands_;
};

inline constexpr double kDefaultPivotFloor = 1e-13;

/// Banded Cholesky factorization. Throws NotPositiveDefinite(row) when a pivot
/// is <= pivot_floor * max|diag(M)|.
BandedCholeskyFactor banded_cholesky_factor(
    const SymBandedMatrix& M, double pivot_floor = kDefaultPivotFloor);

/// Out-of-place banded solve. Throws DimensionMismatch.
Eigen::VectorXd banded_solve(const BandedCholeskyFactor& L,
                             const Eigen::Ref<const Eigen::VectorXd>& d);

}  // namespace mpct
