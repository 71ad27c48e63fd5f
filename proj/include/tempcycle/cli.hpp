#pragma once

#include <string>
#include <vector>

namespace tempcycle {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `tempcycle` tool: synth | train | translate | eval.
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int parse_and_dispatch(int argc, const char* const* argv);
int parse_and_dispatch(const std::vector<std::string>& args);

}  // namespace tempcycle
