#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Command-line front end. All machine-facing output is line-oriented
// key=value on stdout; human-facing diagnostics go to stderr.
//
// Exit codes: 0 success, 1 operational or property failure, 2 usage error
// (unknown flags, missing arguments, malformed GLCKPT_FB_SIZE).

namespace glckpt::cli {

// args excludes the program name.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

// main() adapter: wires argv to the overload above with std::cout/std::cerr.
int run_cli(int argc, const char* const* argv);

}  // namespace glckpt::cli
