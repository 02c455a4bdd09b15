#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace storymem::cli {

// Exit codes: 0 success, 2 usage, 3 input format, 4 backend, 5 capacity.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitBackend = 4;
inline constexpr int kExitCapacity = 5;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace storymem::cli
