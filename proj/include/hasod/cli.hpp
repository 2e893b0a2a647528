#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hasod {

// Exit codes: 0 success, 1 domain error (message starts with the error
// name), 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hasod
