#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace tp::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kSelftestFailed = 1;
inline constexpr int kBadFlags = 2;
inline constexpr int kFileError = 3;
inline constexpr int kContractViolation = 4;

// Entry point; args[0] is the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace tp::cli
