#pragma once

#include <iosfwd>

namespace bwhtsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// Entry point for the bwhtsim command line. CSV goes to --out, or to `out`
// when --out is absent or "-"; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bwhtsim::cli
