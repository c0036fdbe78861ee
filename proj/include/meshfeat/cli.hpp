#pragma once

#include <iosfwd>

namespace meshfeat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `meshfeat` tool: simplify | train | render | eval | bench | synth.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace meshfeat
