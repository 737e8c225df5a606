#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcgen::cli {

// Front end behind the dcgen binary. args holds everything after the program
// name. Results go to out, logs and errors to err. Returns 0 on success,
// 1 on I/O or data errors, 2 on usage errors.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace dcgen::cli
