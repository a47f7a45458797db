#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace eaem::cli {

/// Runs the command-line front end; `args` excludes the program name. Exit codes: 0 success, 1 module error
/// (domain, numeric, configuration, estimation), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace eaem::cli
