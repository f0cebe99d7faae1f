#pragma once

// Front end for the gof tool. Exit codes: 0 = accept (or success for
// non-test commands), 2 = reject, 1 = any error including usage errors.

#include <iosfwd>
#include <string>
#include <vector>

namespace gof::cli {

inline constexpr int kExitAccept = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitReject = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Reads one value per line; '#' starts a comment and blank lines are skipped.
/// Throws gof::Error naming the path and line on malformed input.
std::vector<double> read_data_file(const std::string& path);

}  // namespace gof::cli
