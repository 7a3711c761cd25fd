#pragma once

#include <cstddef>
#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace bpann::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitIntegrity = 4;
inline constexpr int kExitStorage = 5;
inline constexpr int kExitDomain = 6;

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// $BPANN_THREADS when set to a positive integer, else 10.
std::size_t cli_default_threads();

/// Runs the tool. `args` excludes the program name. Normal output goes to
/// `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpann::cli
