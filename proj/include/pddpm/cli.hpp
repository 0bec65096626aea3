#pragma once

namespace pddpm {

/// Full command-line entry point (train/generate/sr/bench/eval). Returns the
/// process exit code: 0 success, 2 usage or configuration error, 3 I/O
/// error, 4 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace pddpm
