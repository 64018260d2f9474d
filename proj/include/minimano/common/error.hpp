#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace minimano {

enum class ErrorKind {
  syntax,
  validation,
  invalid_argument,
  type_mismatch,
  missing_parameter,
  unknown_parameter,
  duplicate,
  not_found,
  unauthorized,  // bad credential or invalid token
  forbidden,     // policy denied the action
  no_capacity,
  invalid_state,
  dependency_cycle,
  unavailable,  // attribute not yet available
  unknown_attribute,
  deployment_failed,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Template syntax error with a 1-based source position.
class ParseError : public Error {
public:
  ParseError(int line, int column, const std::string& message)
      : Error(ErrorKind::syntax, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

}  // namespace minimano
