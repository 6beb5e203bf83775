// Copyright 2026 The RankForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "rankforge/error.hpp"

#include <fmt/format.h>

namespace rankforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kInvalidArgument:
      return "invalid";
    case ErrorKind::kNotFound:
      return "not-found";
    case ErrorKind::kMismatch:
      return "mismatch";
    case ErrorKind::kNumeric:
      return "numeric";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::kParse,
            line == 0 ? message : fmt::format("line {}: {}", line, message)),
      line_(line) {}

}  // namespace rankforge
