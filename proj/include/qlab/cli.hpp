#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qlab/error.hpp"

namespace qlab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConvergence = 3,
};

/// Maps library error codes onto process exit codes.
int exit_code(Errc code) noexcept;

/// Entry point shared by the qlab executable and the tests; `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qlab::cli
