// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyde/cli.hpp"

int main(int argc, char** argv) { return hyde::cli::run_cli(argc, argv); }
