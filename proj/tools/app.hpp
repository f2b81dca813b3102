#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tastenet::cli {

/// Runs the command line in-process. Results go to `out`; failures are a
/// one-line JSON document on `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tastenet::cli
