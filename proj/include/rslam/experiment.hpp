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

#ifndef RSLAM_EXPERIMENT_HPP_
#define RSLAM_EXPERIMENT_HPP_

#include <string>
#include <vector>

#include "rslam/config.hpp"
#include "rslam/metrics.hpp"
#include "rslam/pose_estimation.hpp"
#include "rslam/simulation.hpp"

namespace rslam {

/// Reads cfg.dataset_path when set, otherwise synthesizes the configured
/// scenario.
Dataset obtain_dataset(const ExperimentConfig& cfg);

struct RunArtifacts {
  Dataset dataset;
  SimulationResult sim;
  MetricsReport metrics;
  bool have_metrics = false;  // truth available
};

RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Writes trajectories, closures, cost trace, comm report, metrics, timing
/// and the effective config under dir. Timing lives in its own file so the
/// remaining outputs are bit-reproducible across runs.
void write_run_outputs(const RunArtifacts& run, const ExperimentConfig& cfg,
                       const std::string& dir);

/// Trajectory file: one `EST t robot x y theta` line per node.
void write_trajectories(const std::vector<std::vector<TimedPose>>& trajectories,
                        const std::string& path);
std::vector<std::vector<TimedPose>> read_trajectories(const std::string& path);

/// Closure file: one `LC t from to x y theta residual window` line each.
void write_closures(const std::vector<LoopClosure>& closures, const std::string& path);
std::vector<LoopClosure> read_closures(const std::string& path);

/// A window paired with the truth relative pose at its end time
/// (estimation-level sweep material).
struct LabeledWindow {
  RangingWindow window;
  Pose2d truth_rel;
};

/// Windows for one ordered robot pair, one per estimation period, built the
/// same way the robot node builds them (tau rangings spaced `stride` apart).
std::vector<LabeledWindow> collect_windows(const Dataset& dataset, RobotId from, RobotId to,
                                           int tau, double period, int stride = 1);

/// Table/figure reproduction presets: tab1, tab2, fig4, fig6, fig7, fig8,
/// tab4. Each writes one machine-readable CSV (plus grids for fig4) under
/// dir. Throws std::runtime_error for unknown presets.
void run_sweep_preset(const ExperimentConfig& cfg, const std::string& preset,
                      const std::string& dir);

/// Derives per-figure plot CSVs from existing run/sweep outputs in dir;
/// re-running is idempotent. Throws std::runtime_error listing the missing
/// inputs when nothing usable exists.
std::vector<std::string> emit_plot_data(const std::string& dir);

void write_residual_grid_csv(const ResidualGrid& grid, const std::string& path);

}  // namespace rslam

#endif  // RSLAM_EXPERIMENT_HPP_
