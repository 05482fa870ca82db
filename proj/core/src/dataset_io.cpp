#include "maxzero/dataset_io.hpp"

#include "maxzero/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace maxzero {

std::vector<CsvRecord> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines carry no fields and are skipped.
    if (record_has_content) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw InputError("unexpected quote inside unquoted field", line,
                           current.fields.size() + 1);
        }
        in_quotes = true;
        field_was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (field_was_quoted) {
          throw InputError("characters after closing quote", line, current.fields.size() + 1);
        }
        field.push_back(c);
        record_has_content = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field", current.line);
  if (record_has_content || !field.empty()) end_record();
  return records;
}

namespace {

enum class Block { response, nuisance, test };

struct ColumnRole {
  Block block;
  std::size_t position;  // 0-based within the block
};

std::optional<std::size_t> numbered(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  std::size_t value = 0;
  const auto* first = name.data() + 1;
  const auto* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value == 0 || name[1] == '0') return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  const auto records = parse_csv(text);
  if (records.empty()) throw InputError("empty CSV: expected a header row", 1);

  const CsvRecord& header = records.front();
  std::vector<ColumnRole> roles;
  std::map<std::size_t, std::size_t> nuisance_cols;  // number -> column
  std::map<std::size_t, std::size_t> test_cols;
  std::optional<std::size_t> y_col;

  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    const std::string_view name = trim(header.fields[c]);
    if (name == "y") {
      if (y_col) throw InputError("duplicate column 'y'", header.line, c + 1);
      y_col = c;
    } else if (auto d = numbered(name, 'd')) {
      if (!nuisance_cols.emplace(*d, c).second) {
        throw InputError("duplicate column '" + std::string(name) + "'", header.line, c + 1);
      }
    } else if (auto t = numbered(name, 't')) {
      if (!test_cols.emplace(*t, c).second) {
        throw InputError("duplicate column '" + std::string(name) + "'", header.line, c + 1);
      }
    } else {
      throw InputError("unknown column '" + std::string(name) +
                           "' (expected y, d1..dK, t1..tJ)",
                       header.line, c + 1);
    }
  }
  if (!y_col) throw InputError("missing required column 'y'", header.line);
  if (test_cols.empty()) throw InputError("no test columns t1..tJ", header.line);
  if (!nuisance_cols.empty() && nuisance_cols.rbegin()->first != nuisance_cols.size()) {
    throw InputError("nuisance columns must be numbered d1..dK without gaps", header.line);
  }
  if (test_cols.rbegin()->first != test_cols.size()) {
    throw InputError("test columns must be numbered t1..tJ without gaps", header.line);
  }

  roles.resize(header.fields.size());
  roles[*y_col] = {Block::response, 0};
  for (const auto& [number, col] : nuisance_cols) roles[col] = {Block::nuisance, number - 1};
  for (const auto& [number, col] : test_cols) roles[col] = {Block::test, number - 1};

  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  if (n == 0) throw InputError("CSV has a header but no data rows", header.line);
  Vector y(n);
  Matrix xd(n, static_cast<Eigen::Index>(nuisance_cols.size()));
  Matrix xt(n, static_cast<Eigen::Index>(test_cols.size()));

  for (Eigen::Index r = 0; r < n; ++r) {
    const CsvRecord& rec = records[static_cast<std::size_t>(r) + 1];
    if (rec.fields.size() != header.fields.size()) {
      throw InputError("expected " + std::to_string(header.fields.size()) + " fields, found " +
                           std::to_string(rec.fields.size()),
                       rec.line);
    }
    for (std::size_t c = 0; c < rec.fields.size(); ++c) {
      const std::string_view raw = trim(rec.fields[c]);
      double value = 0.0;
      const auto* last = raw.data() + raw.size();
      auto [ptr, ec] = std::from_chars(raw.data(), last, value);
      if (raw.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw InputError("not a finite number: '" + std::string(raw) + "'", rec.line, c + 1);
      }
      const ColumnRole role = roles[c];
      const auto pos = static_cast<Eigen::Index>(role.position);
      switch (role.block) {
        case Block::response: y[r] = value; break;
        case Block::nuisance: xd(r, pos) = value; break;
        case Block::test: xt(r, pos) = value; break;
      }
    }
  }
  return Dataset(std::move(y), std::move(xd), std::move(xt));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "y";
  for (std::size_t j = 1; j <= data.k_delta(); ++j) out << ",d" << j;
  for (std::size_t j = 1; j <= data.k_theta(); ++j) out << ",t" << j;
  out << '\n';
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(data.n()); ++r) {
    out << format_double(data.y()[r]);
    for (Eigen::Index j = 0; j < data.x_delta().cols(); ++j) {
      out << ',' << format_double(data.x_delta()(r, j));
    }
    for (Eigen::Index j = 0; j < data.x_theta().cols(); ++j) {
      out << ',' << format_double(data.x_theta()(r, j));
    }
    out << '\n';
  }
}

}  // namespace maxzero
