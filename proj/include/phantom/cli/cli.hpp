#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace phantom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Flat `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Keys are long flag names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Entry point behind the `phantom` executable. args excludes the program
/// name. Returns 0 on success, 2 on usage or input errors, 3 on numerical
/// failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phantom::cli
