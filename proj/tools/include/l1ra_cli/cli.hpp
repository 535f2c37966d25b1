// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l1ra::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // runtime failure, infeasible plan, aborted training
  kExitUsage = 2,    // bad flags, unreadable or invalid config
};

/// Entry point shared by the binary and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace l1ra::cli
