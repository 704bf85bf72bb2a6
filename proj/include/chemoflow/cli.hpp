#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chemoflow {

/// Entry point of the command-line tool. argv[0] is the program name and
/// argv[1] one of simulate, reference, blowup, compare, sweep.
/// Returns 0 on success, 1 on a validation error, 2 on a numerical failure.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace chemoflow
