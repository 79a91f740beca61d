#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mispca {

enum class ColumnType { numeric, categorical };

/// A single named column. Numeric cells hold NaN when missing; categorical
/// cells hold std::nullopt when missing.
class Column {
 public:
  static Column numeric(std::string name, std::vector<double> values);
  static Column categorical(std::string name, std::vector<std::optional<std::string>> values);

  const std::string& name() const noexcept { return name_; }
  ColumnType type() const noexcept { return type_; }
  std::size_t size() const noexcept;

  bool is_missing(std::size_t row) const;
  double number(std::size_t row) const { return numbers_[row]; }
  const std::optional<std::string>& text(std::size_t row) const { return texts_[row]; }

  const std::vector<double>& numbers() const noexcept { return numbers_; }
  const std::vector<std::optional<std::string>>& texts() const noexcept { return texts_; }

 private:
  std::string name_;
  ColumnType type_ = ColumnType::numeric;
  std::vector<double> numbers_;
  std::vector<std::optional<std::string>> texts_;
};

/// Rectangular table of named columns with unique names.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return columns_.size(); }

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t j) const { return columns_.at(j); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::vector<std::string> column_names() const;

  void add_column(Column column);

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

}  // namespace mispca
