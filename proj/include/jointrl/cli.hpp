// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_CLI_HPP_
#define JOINTRL_CLI_HPP_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace jointrl {

// Exit statuses by error category.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitPolicy = 4,
};

using GetEnv = std::function<const char*(const char*)>;

// Subcommands: train, eval, memory-inspect, replay-metrics.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const GetEnv& getenv_fn);
int run_cli(int argc, char** argv);

}  // namespace jointrl

#endif  // JOINTRL_CLI_HPP_
