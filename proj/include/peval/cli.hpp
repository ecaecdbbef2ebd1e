#pragma once

#include <iosfwd>

namespace peval::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitPartialFailure = 4;

// Entry point behind the `peval` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace peval::cli
