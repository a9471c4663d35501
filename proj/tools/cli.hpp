#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fofr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPipeline = 3;

/// Runs one command; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fofr::cli
