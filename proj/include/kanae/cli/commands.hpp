#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kanae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Entry point of the `kanae` binary. `args` excludes the program name.
/// Returns the process exit code: 0 success, 1 run failure, 2 config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace kanae::cli
