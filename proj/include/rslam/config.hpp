// Copyright 2026 The ranging-slam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RSLAM_CONFIG_HPP_
#define RSLAM_CONFIG_HPP_

#include <string>
#include <vector>

#include "rslam/network.hpp"
#include "rslam/robot_node.hpp"
#include "rslam/scenario.hpp"

namespace rslam {

/// Everything a batch run needs, with embedded defaults. Serialized as a
/// sectioned key = value text file ('#' comments); flags override file
/// values which override defaults.
struct ExperimentConfig {
  ScenarioConfig scenario;
  NoiseConfig noise;
  PipelineConfig pipeline;
  NetConfig net;

  // sweep grids
  std::vector<int> tau_list = {10, 25, 50, 100};
  std::vector<double> epsilon_list = {0.01, 0.05, 0.1, 0.2, 0.5, 0.8};
  std::vector<double> delta_list = {0.05, 0.1, 0.2, 0.5};
  std::vector<double> range_fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> odom_noise_scales = {0.0, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  // run control
  std::string dataset_path;
  std::string output_dir = "out";
  bool final_convergence = true;
  bool parallel_nodes = false;
  int sweep_threads = 0;  // 0 = hardware concurrency
};

/// Parses a config file into cfg (missing keys keep their current values).
/// Throws std::runtime_error naming the offending line.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

/// Applies one "section.key=value" override (the CLI flag form).
/// Throws std::runtime_error for unknown keys or unparsable values.
void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value);

/// The full effective config in file format, parseable by load_config_file.
std::string format_config(const ExperimentConfig& cfg);

/// Keeps dependent fields coherent (pipeline sensor block, net seed / comm
/// range defaults). Call after mutating scenario/noise fields.
void finalize_config(ExperimentConfig& cfg);

}  // namespace rslam

#endif  // RSLAM_CONFIG_HPP_
