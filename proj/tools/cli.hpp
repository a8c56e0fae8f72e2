#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oodkit::cli {

/// Runs the `oodkit` command line with args[0] being the first subcommand
/// token (no program name). Returns the process exit code:
///   0 success, 1 internal error, 2 I/O, 3 input format, 4 contract or usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace oodkit::cli
