#include "mpct/error.hpp"

namespace mpct {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficientG: return "RankDeficientG";
    case ErrorCode::SingularSmallSystem: return "SingularSmallSystem";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyTightenedBox: return "EmptyTightenedBox";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string describe(const std::string& matrix, std::ptrdiff_t block,
                     std::ptrdiff_t row) {
  std::string msg = "matrix '" + matrix + "' is not positive definite";
  if (block >= 0) msg += " (block " + std::to_string(block) + ")";
  msg += " at row " + std::to_string(row);
  return msg;
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::string matrix,
                                         std::ptrdiff_t block,
                                         std::ptrdiff_t row)
    : Error(ErrorCode::NotPositiveDefinite, describe(matrix, block, row)),
      matrix_(std::move(matrix)),
      block_(block),
      row_(row) {}

}  // namespace mpct
