#ifndef NLSPARSE_CLI_HPP_
#define NLSPARSE_CLI_HPP_

#include <cstdint>
#include <ostream>

#include "nlsparse/operators.hpp"

namespace nlsparse {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailed = 2;

/// Entry point of the command line tool. Diagnostics go to `err`, summaries
/// to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Body of `check-jacobian` against an arbitrary model: kExitOk iff the largest
/// relative finite-difference error over `samples` draws is <= 1e-4.
int run_jacobian_check(const ForwardModel& model, std::uint64_t seed, int samples,
                       std::ostream& out, std::ostream& err);

}  // namespace nlsparse

#endif  // NLSPARSE_CLI_HPP_
