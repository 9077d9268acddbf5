#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace s2c::cli {

// Exit codes: 0 pass, 1 verification failure, 2 usage or I/O error.
enum Exit { ok = 0, failed = 1, usage = 2 };

// args excludes the program name, e.g. {"verify", "--family", "A", "--tau", "0.5T"}
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s2c::cli
