// SPDX-License-Identifier: Apache-2.0
#include "slr/error.hpp"

namespace slr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::frame_width: return "frame_width";
    case ErrorKind::range: return "range";
    case ErrorKind::empty_result: return "empty_result";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::label: return "label";
    case ErrorKind::format: return "format";
  }
  return "unknown";
}

}  // namespace slr
