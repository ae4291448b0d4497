// SPDX-License-Identifier: Apache-2.0
#include "permhe/cli/app.hpp"

int main(int argc, char** argv) { return permhe::cli::run_cli(argc, argv); }
