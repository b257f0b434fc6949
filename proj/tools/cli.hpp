#pragma once

#include <iosfwd>

namespace gradsolve::cli {

// Process exit codes. Each outcome class has its own code.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitMaxIter = 3;
inline constexpr int kExitBreakdown = 4;

/// Entry point for `gradsolve solve|bench|simulate|generate`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gradsolve::cli
