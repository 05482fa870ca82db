#include "maxzero/config_reader.hpp"

#include "maxzero/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace maxzero {

namespace {

using json = nlohmann::json;

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    for (;;) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        if (peek(1) == '[') fail("arrays of tables are not supported");
        ++pos_;
        skip_inline_ws();
        const auto path = parse_key_path();
        skip_inline_ws();
        expect(']');
        table = &descend(root, path, true);
        if (!defined_tables_.insert_unique(path)) fail("table defined twice");
      } else {
        const auto path = parse_key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        json value = parse_value();
        assign(*table, path, std::move(value));
      }
      end_of_line();
    }
    return root;
  }

 private:
  struct TableSet {
    std::vector<std::vector<std::string>> seen;
    bool insert_unique(const std::vector<std::string>& p) {
      for (const auto& s : seen) {
        if (s == p) return false;
      }
      seen.push_back(p);
      return true;
    }
  };

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigInvalid("TOML line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  bool newline() {
    if (peek() == '\n') {
      ++pos_;
      ++line_;
      return true;
    }
    if (peek() == '\r' && peek(1) == '\n') {
      pos_ += 2;
      ++line_;
      return true;
    }
    return false;
  }
  void skip_ws_comments_newlines() {
    for (;;) {
      skip_inline_ws();
      skip_comment();
      if (!newline()) return;
    }
  }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (!eof() && !newline()) fail("unexpected trailing characters");
  }

  static bool bare_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    const std::size_t start = pos_;
    while (!eof() && bare_char(peek())) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key()};
    for (;;) {
      skip_inline_ws();
      if (peek() != '.') return path;
      ++pos_;
      skip_inline_ws();
      path.push_back(parse_key());
    }
  }

  json& descend(json& root, const std::vector<std::string>& path, bool whole) {
    json* node = &root;
    const std::size_t stop = whole ? path.size() : path.size() - 1;
    for (std::size_t i = 0; i < stop; ++i) {
      json& child = (*node)[path[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("key '" + path[i] + "' is not a table");
      node = &child;
    }
    return *node;
  }

  void assign(json& table, const std::vector<std::string>& path, json value) {
    json& parent = descend(table, path, false);
    if (parent.contains(path.back())) fail("duplicate key '" + path.back() + "'");
    parent[path.back()] = std::move(value);
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') {
      if (peek(1) == '"' && peek(2) == '"') fail("multi-line strings are not supported");
      return parse_basic_string();
    }
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    if (s_.substr(pos_).starts_with("true")) {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_).starts_with("false")) {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      const char e = s_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u': append_utf8(parse_hex(4), out); break;
        case 'U': append_utf8(parse_hex(8), out); break;
        default: fail(std::string("invalid escape '\\") + e + "'");
      }
    }
  }

  std::uint32_t parse_hex(std::size_t digits) {
    if (pos_ + digits > s_.size()) fail("truncated unicode escape");
    std::uint32_t cp = 0;
    const auto* first = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, first + digits, cp, 16);
    if (ec != std::errc() || ptr != first + digits) fail("invalid unicode escape");
    pos_ += digits;
    return cp;
  }

  static void append_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated literal string");
    std::string out(s_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  json parse_array() {
    expect('[');
    json arr = json::array();
    for (;;) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json parse_inline_table() {
    expect('{');
    json table = json::object();
    skip_inline_ws();
    if (peek() == '}') {
      ++pos_;
      return table;
    }
    for (;;) {
      skip_inline_ws();
      const auto path = parse_key_path();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      assign(table, path, parse_value());
      skip_inline_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return table;
    }
  }

  json parse_number() {
    const std::size_t start = pos_;
    while (!eof() && (bare_char(peek()) || peek() == '+' || peek() == '.')) ++pos_;
    std::string token;
    for (char c : s_.substr(start, pos_ - start)) {
      if (c != '_') token.push_back(c);
    }
    if (token.empty()) fail("expected a value");
    std::string_view body = token;
    bool negative = false;
    if (body.front() == '+' || body.front() == '-') {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    // The tree is handed on as JSON text, which has no inf or nan.
    if (body == "inf" || body == "nan") fail("inf and nan are not supported");
    const bool is_float = body.find_first_of(".eE") != std::string_view::npos;
    if (body.find_first_of(":T") != std::string_view::npos || body.find('-') != std::string_view::npos) {
      if (!is_float || body.find(':') != std::string_view::npos) {
        fail("date-time values are not supported");
      }
    }
    if (!is_float) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec != std::errc() || ptr != body.data() + body.size()) {
        fail("invalid value '" + token + "'");
      }
      if (!negative) return v;
      if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        fail("integer out of range");
      }
      return -static_cast<std::int64_t>(v);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) fail("invalid number '" + token + "'");
    return negative ? -v : v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  TableSet defined_tables_;
};

}  // namespace

std::string toml_to_json(std::string_view text) { return TomlParser(text).parse().dump(); }

std::string config_text_to_json(std::string_view text, ConfigFormat format) {
  if (format == ConfigFormat::toml) return toml_to_json(text);
  try {
    return json::parse(text).dump();
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("JSON: ") + e.what());
  }
}

ConfigFormat config_format_for(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".toml") return ConfigFormat::toml;
  if (ext == ".json") return ConfigFormat::json;
  throw ConfigInvalid("config file '" + path.string() + "' must end in .toml or .json");
}

std::string read_config_as_json(const std::filesystem::path& path) {
  const ConfigFormat format = config_format_for(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_text_to_json(buffer.str(), format);
}

}  // namespace maxzero
