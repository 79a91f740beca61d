#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mispca {

enum class ErrorCode {
  invalid_argument,
  unknown_column,
  empty_indicator,
  degenerate_column,
  estimation_failure,
  decomposition_failure,
  dimension_mismatch,
  undefined_auc,
  ingestion,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by the tetrachoric estimator; carries the offending column pair.
class PairEstimationError : public Error {
 public:
  PairEstimationError(std::size_t first, std::size_t second, const std::string& what)
      : Error(ErrorCode::estimation_failure, what), first_(first), second_(second) {}
  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

 private:
  std::size_t first_, second_;
};

// Thrown while reading delimited text. Row and column are 1-based; 0 means "not applicable".
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : Error(ErrorCode::ingestion, what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_, column_;
};

}  // namespace mispca
