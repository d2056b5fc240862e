#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hrplab::cli {

/// Runs one `hrplab` invocation. `args` excludes the program name. Returns
/// the process exit code: 0 success, 1 validation, 2 data, 3 numerical.
/// Diagnostics go to `err` as a single line prefixed `error:`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hrplab::cli
