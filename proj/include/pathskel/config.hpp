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

// Experiment configuration file.
//
// One `key = value` per line, `#` starts a comment. Paths are relative to the
// config file. `tx` and `trajectory` (and `maintenance_route`) may repeat.
//
//   map = city.map
//   trajectory = street.csv
//   tx = 1 10 40            # id x y [threshold]
//   policy = skeleton_distance
//   threshold = auto        # or a number
//   u_max = 50              # default ceil(0.36 * locations)
//
// Unknown keys are rejected so typos do not silently fall back to defaults.

#ifndef PATHSKEL_CONFIG_HPP
#define PATHSKEL_CONFIG_HPP

#include "pathskel/beamforming.hpp"
#include "pathskel/database.hpp"
#include "pathskel/scenario.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace pathskel
{

struct ExperimentConfig
{
    std::string path;
    Scenario scenario;
    std::optional<std::uint64_t> seed;     // from the file, if given
    std::optional<double> threshold;       // nullopt: optimise under u_max
    std::optional<int> u_max;              // nullopt: ceil(0.36 * locations)
    double euclidean_step_m = 3.0;
    int tx_oversampling = 8;
    int rx_oversampling = 8;
    FrameModel frame;

    MaintenanceScenario maintenance;
    std::vector<int> maintenance_users{10, 25, 50, 100};
    int maintenance_trials = 5;
};

// Throws ParseError for syntax and value errors and for referenced files that
// cannot be opened (reported on the referencing line). load_config throws
// std::runtime_error when the config file itself cannot be opened.
ExperimentConfig parse_config(std::istream &in, const std::string &source, const std::string &base_dir);
ExperimentConfig load_config(const std::string &path);

} // namespace pathskel

#endif
