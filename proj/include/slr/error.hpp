// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace slr {

/// Error categories surfaced to callers and, verbatim, by the CLI.
enum class ErrorKind {
  invalid_argument,
  io,
  schema,
  frame_width,
  range,
  empty_result,
  dimension,
  non_finite,
  label,
  format,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace slr
