// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace toxbench::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

// args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run(int argc, char **argv);

}  // namespace toxbench::cli
