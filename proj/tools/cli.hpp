/* Copyright 2026 The Partsketch Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PARTSKETCH_TOOLS_CLI_HPP_
#define PARTSKETCH_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace partsketch::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

/// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace partsketch::cli

#endif  // PARTSKETCH_TOOLS_CLI_HPP_
