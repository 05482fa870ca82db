#pragma once

#include "maxzero/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace maxzero {

/// RFC-4180 record splitter. Quoted fields may contain commas, doubled quotes
/// and line breaks; CRLF and LF line endings are both accepted. Each record
/// keeps the 1-based line on which it starts so parse errors can point at it.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

[[nodiscard]] std::vector<CsvRecord> parse_csv(std::string_view text);

/// Dataset CSV: a header row naming `y`, nuisance columns `d1..dK` and test
/// columns `t1..tJ` (any order, contiguous numbering), then one numeric row per
/// observation. Violations raise InputError with line and column.
[[nodiscard]] Dataset parse_dataset_csv(std::string_view text);
[[nodiscard]] Dataset read_dataset_csv(const std::filesystem::path& path);

/// Writes columns in the order y, d1..dK, t1..tJ with round-trip precision.
void write_dataset_csv(const Dataset& data, std::ostream& out);

/// Shortest decimal string that parses back to exactly `value`.
[[nodiscard]] std::string format_double(double value);

}  // namespace maxzero
