// SPDX-License-Identifier: Apache-2.0
#include "jointrl/cli.hpp"

int main(int argc, char** argv) { return jointrl::run_cli(argc, argv); }
