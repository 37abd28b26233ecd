#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wasmfp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `wasmfp` binary. `args` excludes the program name.
/// Machine output is JSON on `out`; diagnostics go to `err`. Returns 0 on
/// success, 1 on bad data, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace wasmfp
