#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trustflow {

enum class ErrorCode {
  Syntax,
  Schema,
  UnknownCallee,
  DuplicateComponent,
  DuplicateApi,
  UnknownLevel,
  UnknownExit,
  DanglingFlow,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Syntax: return "syntax error";
    case ErrorCode::Schema: return "schema error";
    case ErrorCode::UnknownCallee: return "unknown callee";
    case ErrorCode::DuplicateComponent: return "duplicate component name";
    case ErrorCode::DuplicateApi: return "duplicate api name";
    case ErrorCode::UnknownLevel: return "unknown level label";
    case ErrorCode::UnknownExit: return "unknown exit point";
    case ErrorCode::DanglingFlow: return "dangling flow reference";
    case ErrorCode::Io: return "i/o error";
  }
  return "error";
}

/// Raised for malformed input documents and contract violations of the
/// analysis entry points. `line`/`column` are 1-based and only set for
/// syntax errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0,
        std::size_t column = 0)
      : std::runtime_error(format(code, message, line, column)),
        code_(code),
        message_(message),
        line_(line),
        column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code and position prefix.
  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::size_t line, std::size_t column) {
    std::string out(to_string(code));
    if (line != 0) {
      out += " at " + std::to_string(line) + ":" + std::to_string(column);
    }
    if (!message.empty()) {
      out += ": " + message;
    }
    return out;
  }

  ErrorCode code_;
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace trustflow
