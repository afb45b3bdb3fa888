#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nakags::cli {

enum ExitCode : int {
    kOk = 0,
    kIoFailure = 1,
    kBadInput = 2,
    kDegenerate = 3,
};

/// Runs the `nakags` command line. `args` excludes the program name.
/// Machine-readable JSON goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nakags::cli
