#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iatforge::pipeline {

/// Parses and runs one command line (without the program name). Returns the
/// process exit code: 0 all benign / success, 1 at least one malicious file,
/// 2 usage or internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iatforge::pipeline
