#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bonsai::cli {

enum ExitCode : int { kOk = 0, kIoFailure = 1, kInvalid = 2 };

/// Runs one command line (without the program name). Library errors map to
/// exit codes: IoError -> 1, ValidationError and usage errors -> 2.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bonsai::cli
