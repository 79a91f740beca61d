#include "mispca/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mispca/error.hpp"

namespace mispca {

const char* to_string(DropReason reason) {
  return reason == DropReason::all_observed ? "all-observed" : "all-missing";
}

IndicatorMatrix IndicatorMatrix::from_binary(const BinaryMatrix& values,
                                             const std::vector<std::string>& names) {
  if (names.size() != static_cast<std::size_t>(values.cols())) {
    throw Error(ErrorCode::dimension_mismatch, "indicator names do not match column count");
  }
  const Eigen::Index n = values.rows();
  IndicatorMatrix out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (values(i, j) > 1) throw Error(ErrorCode::invalid_argument, "indicator entries must be 0 or 1");
      ones += values(i, j);
    }
    const auto& name = names[static_cast<std::size_t>(j)];
    if (ones == 0) {
      out.dropped_.push_back({name, DropReason::all_observed});
    } else if (ones == static_cast<std::size_t>(n)) {
      out.dropped_.push_back({name, DropReason::all_missing});
    } else {
      keep.push_back(j);
      out.names_.push_back(name);
      out.marginals_.push_back(static_cast<double>(ones) / static_cast<double>(n));
    }
  }
  out.values_.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.values_.col(static_cast<Eigen::Index>(c)) = values.col(keep[c]);
  }
  return out;
}

std::vector<bool> IndicatorMatrix::fully_missing_rows() const {
  std::vector<bool> flags(rows(), !empty());
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (values_(i, j) == 0) flags[static_cast<std::size_t>(i)] = false;
    }
  }
  return flags;
}

namespace {

bool cell_missing(const Column& col, std::size_t row, const IndicatorOptions& options) {
  if (col.is_missing(row)) return true;
  if (col.type() == ColumnType::numeric) {
    const double v = col.number(row);
    return std::find(options.numeric_sentinels.begin(), options.numeric_sentinels.end(), v) !=
           options.numeric_sentinels.end();
  }
  const auto& s = *col.text(row);
  return std::find(options.categorical_sentinels.begin(), options.categorical_sentinels.end(), s) !=
         options.categorical_sentinels.end();
}

}  // namespace

IndicatorMatrix build_indicators(const Dataset& data, const std::vector<std::string>& selected,
                                 const IndicatorOptions& options) {
  if (selected.empty()) throw Error(ErrorCode::invalid_argument, "no columns selected");
  const std::size_t n = data.rows();
  BinaryMatrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(selected.size()));
  std::vector<std::string> names;
  names.reserve(selected.size());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    const Column& col = data.column(selected[j]);
    for (std::size_t i = 0; i < n; ++i) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell_missing(col, i, options) ? 1 : 0;
    }
    names.push_back(selected[j] + options.suffix);
  }
  auto ind = IndicatorMatrix::from_binary(values, names);
  if (ind.empty()) {
    throw Error(ErrorCode::empty_indicator,
                "every selected column is fully observed or fully missing; no indicators to analyze");
  }
  return ind;
}

PatternTable tabulate_patterns(const IndicatorMatrix& ind, const PatternOptions& options) {
  const std::size_t n = ind.rows();
  const std::size_t k = ind.cols();
  PatternTable table;
  table.max_possible = k >= 64 ? std::numeric_limits<std::uint64_t>::max() : (std::uint64_t{1} << k) - 1;
  table.fully_missing_dropped = options.drop_fully_missing;

  std::map<std::string, std::size_t> counts;
  std::string key(k, '0');
  for (std::size_t i = 0; i < n; ++i) {
    bool all = k > 0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool m = ind(i, j) != 0;
      key[j] = m ? '1' : '0';
      all = all && m;
    }
    if (all) {
      ++table.n_fully_missing;
      if (options.drop_fully_missing) continue;
    }
    ++counts[key];
  }
  table.percent_base = options.drop_fully_missing ? n - table.n_fully_missing : n;

  table.rows.reserve(counts.size());
  for (const auto& [pattern, count] : counts) {
    PatternRow row;
    row.pattern = pattern;
    row.n_missing_vars = static_cast<std::size_t>(std::count(pattern.begin(), pattern.end(), '1'));
    row.count = count;
    row.percent = table.percent_base ? static_cast<double>(count) / static_cast<double>(table.percent_base) : 0.0;
    table.rows.push_back(std::move(row));
  }
  // std::map iterates lexicographically, so a stable sort on count breaks ties by pattern.
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const PatternRow& a, const PatternRow& b) { return a.count > b.count; });
  for (std::size_t r = 0; r < table.rows.size(); ++r) table.rows[r].rank = r + 1;
  table.n_observed_patterns = table.rows.size();
  return table;
}

}  // namespace mispca
