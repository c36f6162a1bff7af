#pragma once

#include <iosfwd>

namespace npprompt {

/// Entry point of the `npprompt` tool. Exit codes: 0 success, 1 config
/// error, 2 data error, 3 backend error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace npprompt
