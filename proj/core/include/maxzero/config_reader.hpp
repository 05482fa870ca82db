#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace maxzero {

enum class ConfigFormat { toml, json };

/// Converts the TOML subset used by experiment configs into JSON text.
///
/// Supported: comments, [tables] and [dotted.tables], bare/quoted/dotted keys,
/// basic and literal strings, integers, floats (including inf/nan), booleans,
/// arrays (multi-line, trailing comma) and inline tables. Arrays of tables,
/// multi-line strings and date-times are rejected. Errors raise ConfigInvalid
/// with the offending line.
[[nodiscard]] std::string toml_to_json(std::string_view text);

/// Config text as JSON whatever the input format.
[[nodiscard]] std::string config_text_to_json(std::string_view text, ConfigFormat format);

/// Format from the file extension: ".toml" or ".json" (anything else raises
/// ConfigInvalid).
[[nodiscard]] ConfigFormat config_format_for(const std::filesystem::path& path);

/// Reads the file and returns its JSON form. Throws IoError, ConfigInvalid.
[[nodiscard]] std::string read_config_as_json(const std::filesystem::path& path);

}  // namespace maxzero
