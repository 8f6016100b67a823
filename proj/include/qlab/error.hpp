#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qlab {

enum class Errc {
  DimensionMismatch,
  InvalidProbability,
  InvalidState,
  CapExceeded,
  ShapeMismatch,
  DecompositionFailure,
  NonConvergence,
  AlignmentError,
  IndexOutOfRange,
  BadWeights,
  UnknownDemo,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace qlab
