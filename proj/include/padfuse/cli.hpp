#pragma once

#include <iosfwd>

namespace padfuse {

/// Entry point of the padfuse command line tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace padfuse
