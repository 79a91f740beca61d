#include "mispca/dataset.hpp"

#include <cmath>

#include "mispca/error.hpp"

namespace mispca {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::unknown_column: return "unknown column";
    case ErrorCode::empty_indicator: return "empty indicator matrix";
    case ErrorCode::degenerate_column: return "degenerate column";
    case ErrorCode::estimation_failure: return "estimation failure";
    case ErrorCode::decomposition_failure: return "decomposition failure";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::undefined_auc: return "undefined AUC";
    case ErrorCode::ingestion: return "ingestion error";
  }
  return "error";
}

Column Column::numeric(std::string name, std::vector<double> values) {
  Column c;
  c.name_ = std::move(name);
  c.type_ = ColumnType::numeric;
  c.numbers_ = std::move(values);
  return c;
}

Column Column::categorical(std::string name, std::vector<std::optional<std::string>> values) {
  Column c;
  c.name_ = std::move(name);
  c.type_ = ColumnType::categorical;
  c.texts_ = std::move(values);
  return c;
}

std::size_t Column::size() const noexcept {
  return type_ == ColumnType::numeric ? numbers_.size() : texts_.size();
}

bool Column::is_missing(std::size_t row) const {
  if (type_ == ColumnType::numeric) return std::isnan(numbers_[row]);
  return !texts_[row].has_value();
}

Dataset::Dataset(std::vector<Column> columns) {
  for (auto& c : columns) add_column(std::move(c));
}

void Dataset::add_column(Column column) {
  if (find(column.name())) {
    throw Error(ErrorCode::invalid_argument, "duplicate column name '" + column.name() + "'");
  }
  if (columns_.empty()) {
    rows_ = column.size();
  } else if (column.size() != rows_) {
    throw Error(ErrorCode::dimension_mismatch,
                "column '" + column.name() + "' has " + std::to_string(column.size()) +
                    " rows, expected " + std::to_string(rows_));
  }
  columns_.push_back(std::move(column));
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name() == name) return j;
  }
  return std::nullopt;
}

const Column& Dataset::column(std::string_view name) const {
  auto j = find(name);
  if (!j) throw Error(ErrorCode::unknown_column, "unknown column '" + std::string(name) + "'");
  return columns_[*j];
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name());
  return names;
}

}  // namespace mispca
