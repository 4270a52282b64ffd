#pragma once

#include <iosfwd>

namespace anovakrr {

// Entry point of the `anovakrr` command-line tool. Human-readable output
// goes to `out`, diagnostics to `err`. Returns the process exit code:
// 0 on success, 2 for I/O errors, 3 for invalid input or arguments,
// 4 for numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anovakrr
