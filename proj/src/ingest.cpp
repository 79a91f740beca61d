#include "mispca/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>

#include "mispca/error.hpp"

namespace mispca {

std::vector<std::string> split_record(const std::string& line, char delimiter, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        field += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw IngestError("unterminated quoted field", row, fields.size() + 1);
  fields.push_back(std::move(field));
  return fields;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Dataset ingest(std::istream& in, const IngestOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("empty input: no header row", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_record(line, options.delimiter, 1);
  std::set<std::string> seen;
  for (std::size_t j = 0; j < header.size(); ++j) {
    header[j] = trim(header[j]);
    if (header[j].empty()) throw IngestError("empty header name", 1, j + 1);
    if (!seen.insert(header[j]).second) throw IngestError("duplicate header name '" + header[j] + "'", 1, j + 1);
  }

  const std::set<std::string> sentinels(options.sentinels.begin(), options.sentinels.end());
  std::vector<std::vector<std::optional<std::string>>> cells(header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line, options.delimiter, row);
    if (fields.size() != header.size()) {
      throw IngestError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                        row, std::min(fields.size(), header.size()) + 1);
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      std::string value = trim(fields[j]);
      if (sentinels.count(value)) {
        cells[j].emplace_back(std::nullopt);
      } else {
        cells[j].emplace_back(std::move(value));
      }
    }
  }

  std::vector<Column> columns;
  columns.reserve(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::size_t present = 0, parsed = 0;
    std::vector<double> numbers;
    numbers.reserve(cells[j].size());
    for (const auto& cell : cells[j]) {
      if (!cell) {
        numbers.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      ++present;
      const auto v = parse_number(*cell);
      if (v) ++parsed;
      numbers.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    // An all-missing column has nothing to contradict the numeric reading.
    if (present == 0 || static_cast<double>(parsed) >= options.numeric_share * static_cast<double>(present)) {
      columns.push_back(Column::numeric(header[j], std::move(numbers)));
    } else {
      columns.push_back(Column::categorical(header[j], std::move(cells[j])));
    }
  }
  return Dataset(std::move(columns));
}

Dataset ingest(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return ingest(in, options);
}

}  // namespace mispca
