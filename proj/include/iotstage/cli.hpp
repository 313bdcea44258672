#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace iotstage {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitUsage = 64;

inline constexpr const char* kVersion = "0.1.0";

// Entry point behind the iotstage executable. `args` excludes the program
// name. Summary output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* abort_flag = nullptr);

}  // namespace iotstage
