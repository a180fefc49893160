// SPDX-License-Identifier: Apache-2.0

#include "toxbench/cli/cli.h"

int main(int argc, char **argv) { return toxbench::cli::run(argc, argv); }
