#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpct {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  RankDeficientG,
  SingularSmallSystem,
  SingularKkt,
  NonFiniteInput,
  EmptyTightenedBox,
  InvalidArgument,
  NotConverged,
  Infeasible,
  Io,
};

const char* to_string(ErrorCode code);

/// Base class for every error raised by the library. Carries a machine
/// readable code next to the human readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorCode::DimensionMismatch, what) {}
};

/// Raised when a Cholesky pivot is non-positive or below the pivot floor.
/// `block` is -1 for factorizations that are not block structured.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::string matrix, std::ptrdiff_t block,
                      std::ptrdiff_t row);

  const std::string& matrix() const noexcept { return matrix_; }
  std::ptrdiff_t block() const noexcept { return block_; }
  std::ptrdiff_t row() const noexcept { return row_; }

 private:
  std::string matrix_;
  std::ptrdiff_t block_;
  std::ptrdiff_t row_;
};

}  // namespace mpct
