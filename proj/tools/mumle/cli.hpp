#pragma once

#include <iosfwd>

namespace mumle::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kUsage = 2,
  kDomain = 3,
  kDegenerate = 4,
  kUnsupported = 5,
};

// Entry point of the mumle tool; argv[0] is the program name. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mumle::cli
