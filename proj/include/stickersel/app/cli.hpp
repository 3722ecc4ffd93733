#pragma once
// Command-line front end. `run_cli` is the whole program minus process
// setup, so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace stickersel::app {

// args excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stickersel::app
