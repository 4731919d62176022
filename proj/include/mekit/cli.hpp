#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mekit {

// Exit codes of the command-line front end.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInvalidInput = 2;

// Runs the CLI with args[0] as the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mekit
