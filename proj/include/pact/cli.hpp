#pragma once

#include <ostream>

namespace pact {

/// Entry point of the `pact` command. Exit codes: 0 success, 1 domain error
/// (including "document not found" and "chain invalid"), 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pact
