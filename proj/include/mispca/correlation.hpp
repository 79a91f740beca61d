#pragma once

#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "mispca/indicators.hpp"

namespace mispca {

enum class CorrelationKind { pearson, tetrachoric };
const char* to_string(CorrelationKind kind);
CorrelationKind parse_correlation_kind(const std::string& text);

struct CorrelationMatrix {
  Eigen::MatrixXd values;
  CorrelationKind kind = CorrelationKind::pearson;
  bool pd_repaired = false;
  double min_eigenvalue_before_repair = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Counts of a pair of binary columns; first index is the first column's value.
struct TwoByTwo {
  double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
  double total() const noexcept { return n00 + n01 + n10 + n11; }
};

/// Phi coefficients of the 0/1 columns. Throws degenerate_column on a
/// zero-variance column.
CorrelationMatrix pearson(const BinaryMatrix& values);
CorrelationMatrix pearson(const IndicatorMatrix& ind);

/// Two-step ML tetrachoric estimate for one table. Thresholds come from the
/// table's marginals; a table with an empty cell gets 0.5 added to every cell.
/// The estimate lies in [-0.999, 0.999].
double tetrachoric_pair(TwoByTwo table);

CorrelationMatrix tetrachoric(const IndicatorMatrix& ind);

/// Eigenvalue clipping at 1e-6 followed by rescaling to unit diagonal.
/// Returns the input unchanged when it is already usable.
CorrelationMatrix repair_pd(CorrelationMatrix c);

inline constexpr double kMinEigenvalue = 1e-6;
inline constexpr double kTetrachoricBound = 0.999;

}  // namespace mispca
