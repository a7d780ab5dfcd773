// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/cli/run.hpp"

int main(int argc, char** argv) { return vggflow::cli::main_entry(argc, argv); }
