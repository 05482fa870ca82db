#include "maxzero/errors.hpp"

namespace maxzero {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::InsufficientSample: return "InsufficientSample";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyFits: return "EmptyFits";
    case ErrorCode::NonpositiveSe: return "NonpositiveSe";
    case ErrorCode::DrawFailed: return "DrawFailed";
    case ErrorCode::BootstrapDegenerate: return "BootstrapDegenerate";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InputError: return "InputError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string with_position(const std::string& what, std::size_t line, std::size_t column) {
  if (line == 0) return what;
  std::string out = "line " + std::to_string(line);
  if (column != 0) out += ", column " + std::to_string(column);
  return out + ": " + what;
}

}  // namespace

InputError::InputError(const std::string& what, std::size_t line, std::size_t column)
    : Error(ErrorCode::InputError, with_position(what, line, column)),
      line_(line),
      column_(column) {}

}  // namespace maxzero
