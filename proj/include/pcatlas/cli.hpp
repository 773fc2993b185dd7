#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcatlas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Runs one subcommand. The JSON result (or error object) goes to `out`,
// help text and progress to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Applies PCATLAS_THREADS, if set, as the default OpenMP thread count.
void apply_thread_env();

}  // namespace pcatlas::cli
