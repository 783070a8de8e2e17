#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pngkpz::cli {

enum Exit : int { ok = 0, failure = 1, schema = 2, convergence = 3, budget = 4 };

/// Runs one subcommand; args excludes the program name. Results go to --out or `out`,
/// messages to `err`. No file is written unless the run succeeds.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

}  // namespace pngkpz::cli
