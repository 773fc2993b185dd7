#pragma once

#include <stdexcept>
#include <string>

namespace pcatlas {

enum class ErrorKind {
  kArgument,
  kParse,
  kStructural,
  kDegenerateGeometry,
  kSize,
  kConsistency,
  kEmptyInput,
  kIo,
  kSolver,
  kNumerical,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can route it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pcatlas
