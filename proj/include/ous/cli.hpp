#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ous {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

/// Entry point behind the `ous` binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ous
