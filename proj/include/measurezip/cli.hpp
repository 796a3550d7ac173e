#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace measurezip {

// Runs one command line (without the program name). Returns 0 on success,
// 2 on usage errors and 1 on runtime failures. Data goes to `out` or files,
// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Golden-output comparisons ignore these JSON keys / CSV columns.
const std::vector<std::string>& volatile_output_fields();

}  // namespace measurezip
