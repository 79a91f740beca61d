#pragma once

#include <istream>
#include <string>
#include <vector>

#include "mispca/dataset.hpp"

namespace mispca {

struct IngestOptions {
  std::vector<std::string> sentinels{"", "NA", "."};
  char delimiter = ',';
  double numeric_share = 0.90;  // parse rate needed to type a column numeric
};

/// Reads delimited text with a header row. Double-quoted fields may contain
/// the delimiter and doubled quotes. Throws IngestError with 1-based row and
/// column context.
Dataset ingest(const std::string& path, const IngestOptions& options = {});
Dataset ingest(std::istream& in, const IngestOptions& options = {});

/// Splits one record; exposed for tests.
std::vector<std::string> split_record(const std::string& line, char delimiter, std::size_t row);

}  // namespace mispca
