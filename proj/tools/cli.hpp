// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace completion::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Runs `synth | train | eval | report`. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out,
        std::ostream& err);

}  // namespace completion::cli
