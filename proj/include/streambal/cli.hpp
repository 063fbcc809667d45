#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace streambal::cli {

enum ExitCode : int { ok = 0, internal = 1, config = 2, data = 3 };

// Entry point behind the `streambal` binary. args[0] is the program name.
// Standard streams are injected so subcommands can run in-process.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace streambal::cli
