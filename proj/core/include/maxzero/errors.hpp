#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxzero {

enum class ErrorCode {
  NonPositiveDefinite,
  InsufficientSample,
  NoConvergence,
  IndexOutOfRange,
  EmptyFits,
  NonpositiveSe,
  DrawFailed,
  BootstrapDegenerate,
  ConfigInvalid,
  InputError,
  IoError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Base class of every error raised by the library. `code()` is stable and
/// is what the CLI and the reports surface to users.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(C, what) {}
};

using NonPositiveDefinite = TypedError<ErrorCode::NonPositiveDefinite>;
using InsufficientSample = TypedError<ErrorCode::InsufficientSample>;
using NoConvergence = TypedError<ErrorCode::NoConvergence>;
using IndexOutOfRange = TypedError<ErrorCode::IndexOutOfRange>;
using EmptyFits = TypedError<ErrorCode::EmptyFits>;
using NonpositiveSe = TypedError<ErrorCode::NonpositiveSe>;
using DrawFailed = TypedError<ErrorCode::DrawFailed>;
using BootstrapDegenerate = TypedError<ErrorCode::BootstrapDegenerate>;
using ConfigInvalid = TypedError<ErrorCode::ConfigInvalid>;
using IoError = TypedError<ErrorCode::IoError>;

/// Malformed user input (CSV, flags). Carries a 1-based line/column when known;
/// zero means "not applicable".
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace maxzero
