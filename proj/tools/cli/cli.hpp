#pragma once

#include <iosfwd>

namespace fpforge::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

// Parses argv and runs one subcommand (stats, augment, eval, radiomap).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fpforge::cli
