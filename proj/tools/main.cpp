// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/cli.hpp"

int main(int argc, char** argv) { return agentpanel::cli_dispatch(argc, argv); }
