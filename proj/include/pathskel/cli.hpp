// SPDX-License-Identifier: Apache-2.0
//
// pathskel - path-skeleton beam tracking simulator for mobile mmWave links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PATHSKEL_CLI_HPP
#define PATHSKEL_CLI_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pathskel
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char *kToolVersion = "0.1.0";

struct CommonOptions
{
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

int cmd_run(const CommonOptions &opts, std::ostream &out, std::ostream &err);
int cmd_optimize_threshold(const CommonOptions &opts, std::optional<int> u_max, std::ostream &out,
                           std::ostream &err);
int cmd_maintenance(const CommonOptions &opts, const std::vector<int> &user_counts, std::optional<int> trials,
                    std::ostream &out, std::ostream &err);
int cmd_trace(const CommonOptions &opts, int tx_index, double x, double y, std::ostream &out, std::ostream &err);

// Parses argv and dispatches to a subcommand.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace pathskel

#endif
