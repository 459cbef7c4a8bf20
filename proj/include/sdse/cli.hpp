#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Worker count: the flag if given, else SDSE_WORKERS when it holds a
/// positive integer, else the hardware concurrency.
std::size_t resolve_workers(std::optional<std::size_t> flag);

/// `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace sdse::cli
