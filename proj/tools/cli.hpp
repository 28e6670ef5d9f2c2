#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fsjump::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace fsjump::cli
