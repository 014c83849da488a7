#pragma once

#include <string>
#include <vector>

namespace dgbr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

/// Runs one `dgbr` invocation; args excludes the program name. Errors are
/// reported on stderr as "error: <kind>: <message>".
int run(const std::vector<std::string>& args);

}  // namespace dgbr::cli
