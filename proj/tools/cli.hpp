#pragma once

#include <string>
#include <vector>

namespace clam::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericError = 3;

/// args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace clam::cli
