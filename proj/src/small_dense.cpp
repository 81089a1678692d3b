#include "mpct/small_dense.hpp"

#include <cmath>
#include <string>

#include "mpct/error.hpp"

namespace mpct {

SmallDense::SmallDense(Eigen::MatrixXd matrix, double rcond_floor)
    : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw DimensionMismatch("small dense system must be square");
  }
  if (!matrix_.allFinite()) {
    throw Error(ErrorCode::SingularSmallSystem, "small dense system has non-finite entries");
  }
  lu_.compute(matrix_);
  rcond_ = lu_.rcond();
  if (!(rcond_ > rcond_floor)) {
    throw Error(ErrorCode::SingularSmallSystem,
                "small dense system is numerically singular (rcond=" +
                    std::to_string(rcond_) + ")");
  }
}

void SmallDense::solve_in_place(Eigen::Ref<Eigen::VectorXd> x) const {
  if (x.size() != matrix_.rows()) throw DimensionMismatch("small dense solve: vector size");
  x = lu_.solve(x);
}

Eigen::MatrixXd SmallDense::solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  if (rhs.rows() != matrix_.rows()) throw DimensionMismatch("small dense solve: rows");
  return lu_.solve(rhs);
}

}  // namespace mpct
