#pragma once

#include <string>
#include <vector>

namespace pgbn {

inline constexpr unsigned long long kDefaultSeed = 20151;

// Entry point of the `pgbn` tool. args[0] is the program name. Failures
// print "error: code=<kind> message=<text>" on stderr and return nonzero.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace pgbn
