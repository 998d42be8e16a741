#pragma once

#include <ostream>

namespace sufgram {

/// Dispatches `engine <subcommand> ...`. Results go to `out` as one JSON
/// record per line; failures print a single diagnostic line to `err` and
/// return nonzero.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sufgram
