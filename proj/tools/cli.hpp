#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vse/vector.hpp"

namespace vse::cli {

/// Exit codes of the `vse` binary.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kInternal = 3,
};

/// Runs the command line `args` (args[0] is the program name). Regular
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Parses comma-separated rows of floats. Blank lines are skipped; errors
/// name the 1-based line.
EmbeddingSet parse_csv(std::string_view text);

/// One row per line, values printed with enough digits to parse back to
/// the same f32.
std::string to_csv(const EmbeddingSet& set);

} // namespace vse::cli
