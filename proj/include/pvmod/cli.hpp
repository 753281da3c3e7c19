#ifndef PVMOD_CLI_HPP
#define PVMOD_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace pvmod {

// Runs one CLI invocation (argv without the program name) against the
// given streams. Returns the process exit status: 0 on success, 1 on
// usage/validation/parse problems, 2 on numerical failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

} // namespace pvmod

#endif
