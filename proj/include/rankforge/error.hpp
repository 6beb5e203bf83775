// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rankforge {

enum class ErrorKind {
  kParse,
  kInvalidArgument,
  kNotFound,
  kMismatch,
  kNumeric,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind is stable and is
/// what the command-line tool prints as its machine-readable prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed input. `line` is 1-based, 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rankforge
