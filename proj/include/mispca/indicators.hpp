#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/dataset.hpp"

namespace mispca {

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class DropReason { all_observed, all_missing };
const char* to_string(DropReason reason);

struct DroppedColumn {
  std::string name;
  DropReason reason;
};

/// n x k missingness indicators (1 = missing, 0 = observed). Every retained
/// column has a marginal strictly inside (0, 1).
class IndicatorMatrix {
 public:
  /// Keeps the non-degenerate columns of `values`; the rest go to dropped().
  static IndicatorMatrix from_binary(const BinaryMatrix& values, const std::vector<std::string>& names);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const noexcept { return values_.cols() == 0; }

  const BinaryMatrix& values() const noexcept { return values_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& marginals() const noexcept { return marginals_; }
  const std::vector<DroppedColumn>& dropped() const noexcept { return dropped_; }

  Eigen::MatrixXd as_double() const { return values_.cast<double>(); }

  /// Rows with every retained indicator equal to 1.
  std::vector<bool> fully_missing_rows() const;

 private:
  BinaryMatrix values_;
  std::vector<std::string> names_;
  std::vector<double> marginals_;
  std::vector<DroppedColumn> dropped_;
};

struct IndicatorOptions {
  std::vector<double> numeric_sentinels;
  std::vector<std::string> categorical_sentinels{""};
  std::string suffix = "_m";
};

/// Step 1: indicator (i, j) = 1 iff cell (i, selected[j]) is missing.
/// Throws unknown_column for a bad name and empty_indicator when every
/// selected column is degenerate.
IndicatorMatrix build_indicators(const Dataset& data, const std::vector<std::string>& selected,
                                 const IndicatorOptions& options = {});

struct PatternRow {
  std::string pattern;  // leftmost bit = first indicator column
  std::size_t n_missing_vars = 0;
  std::size_t count = 0;
  double percent = 0.0;  // fraction of the percent base
  std::size_t rank = 0;
};

struct PatternTable {
  std::vector<PatternRow> rows;
  std::uint64_t max_possible = 0;  // 2^k - 1, saturated for k >= 64
  std::size_t n_observed_patterns = 0;
  std::size_t n_fully_missing = 0;
  std::size_t percent_base = 0;
  bool fully_missing_dropped = false;
};

struct PatternOptions {
  /// Exclude rows missing on every indicator from the table and the percent base.
  bool drop_fully_missing = false;
};

PatternTable tabulate_patterns(const IndicatorMatrix& ind, const PatternOptions& options = {});

}  // namespace mispca
