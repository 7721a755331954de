#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oodgmix {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the directory that relative --dataset-dir
/// values are resolved against when they do not exist as given.
inline constexpr const char* kDataRootEnv = "OODGMIX_DATA_ROOT";

/// Entry point for `oodgmix <train|split-stats|evt-fit|gradcheck> [flags]`.
/// args[0] is the program name. Returns 0 on success, 1 on configuration
/// errors, 2 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oodgmix
