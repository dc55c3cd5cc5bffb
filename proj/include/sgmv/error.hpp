#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sgmv {

enum class ErrorCode {
  argument = 1,
  parse,
  dimension,
  empty_input,
  numeric,
  not_descent,
  diverged,
  io,
  render,
};

/// Base class of every error thrown by the library. The code maps one-to-one
/// onto the status values of the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ErrorCode::argument, what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::parse,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorCode::dimension, what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what)
      : Error(ErrorCode::empty_input, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCode::numeric, what) {}
};

class NotDescentError : public Error {
 public:
  explicit NotDescentError(const std::string& what)
      : Error(ErrorCode::not_descent, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class RenderError : public Error {
 public:
  explicit RenderError(const std::string& what)
      : Error(ErrorCode::render, what) {}
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs the sink for non-fatal diagnostics. Passing an empty handler
/// restores the default (stderr). Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace sgmv
