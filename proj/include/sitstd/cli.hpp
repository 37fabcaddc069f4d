#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sitstd/error.hpp"

namespace sitstd {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFormat = 4;
inline constexpr int kExitGrid = 5;
inline constexpr int kExitUndefined = 6;
inline constexpr int kExitBaseline = 7;

int exit_code(ErrorKind kind) noexcept;

// `args` excludes the program name. Results go to `out`, the resolved config
// and errors to `err`.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_run(int argc, char** argv);

}  // namespace sitstd
