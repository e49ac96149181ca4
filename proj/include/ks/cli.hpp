#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ks {

// Command-line entry point (argv without the program name). Writes results to
// `out` and diagnostics to `err`. Returns the process exit code:
//   0  satisfiable / property holds / construction succeeded
//   1  unsatisfiable / property fails
//   2  usage or runtime error
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ks
