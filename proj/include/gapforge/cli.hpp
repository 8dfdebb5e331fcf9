#pragma once

namespace gapforge {

// Exit codes: 0 success, 1 usage or I/O error, 2 inconclusive result,
// 3 invariant or bound violation.
int run_cli(int argc, char** argv);

}  // namespace gapforge
