#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sigate::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_runtime = 3;

/// Runs one command line (without the program name). Progress goes to
/// `out`; failures print an error JSON object to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sigate::cli
