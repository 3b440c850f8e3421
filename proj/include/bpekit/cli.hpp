#pragma once

#include <iosfwd>

namespace bpekit::cli {

// Subcommands: train, encode, decode, bench, chat-render, shard-plan.
// Data goes to `out`, level-tagged log lines to `err`.
// Exit codes: 0 success, 1 domain error, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bpekit::cli
