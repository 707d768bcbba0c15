// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace loaa {

// Runs `loaa <command> [flags]`; args excludes the program name. Returns the
// process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loaa
