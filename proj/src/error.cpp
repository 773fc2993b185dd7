#include "pcatlas/error.hpp"

namespace pcatlas {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument:
      return "argument";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kStructural:
      return "structural";
    case ErrorKind::kDegenerateGeometry:
      return "degenerate_geometry";
    case ErrorKind::kSize:
      return "size";
    case ErrorKind::kConsistency:
      return "consistency";
    case ErrorKind::kEmptyInput:
      return "empty_input";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kSolver:
      return "solver";
    case ErrorKind::kNumerical:
      return "numerical";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace pcatlas
