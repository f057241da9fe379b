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

#ifndef RSLAM_SCENARIO_HPP_
#define RSLAM_SCENARIO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "rslam/types.hpp"

namespace rslam {

struct ScenarioConfig {
  int n_robots = 3;
  double duration = 300.0;     // s
  double speed_limit = 0.2;    // m/s
  double arena_width = 10.0;   // m
  double arena_height = 12.0;  // m
  double turn_rate = 0.8;      // rad/s, heading slew limit
  double sample_rate = 50.0;   // Hz, ground-truth grid (the UWB grid)
  std::uint64_t seed = 0;
};

/// Smooth random-waypoint trajectories inside the arena, sampled on the
/// ground-truth grid. Deterministic given the config (including seed).
/// Throws std::invalid_argument on non-positive duration/arena or n_robots < 2.
GroundTruth generate_trajectories(const ScenarioConfig& cfg);

/// Dead-reckoned odometry per robot: true relative motions integrated from
/// identity with per-step Gaussian noise in the body frame, sampled at
/// cfg.odom_rate.
std::vector<std::vector<OdometrySample>> synthesize_odometry(const GroundTruth& truth,
                                                             const NoiseConfig& cfg);

/// UWB rangings at cfg.uwb_rate for every ordered robot pair within
/// cfg.max_range: true distance + Gaussian noise + occasional positive
/// exponential NLOS bias, clamped at 0.
std::vector<RangingMeasurement> synthesize_ranging(const GroundTruth& truth,
                                                   const NoiseConfig& cfg);

/// A dataset bundles the sensor streams and, optionally, the truth.
///
/// File format (line-oriented text, '#' starts a comment):
///   ODOM t robot x y theta
///   UWB  t from to dist
///   GT   t robot x y theta
struct Dataset {
  std::vector<std::vector<OdometrySample>> odometry;  // per robot
  std::vector<RangingMeasurement> ranging;            // time-ordered
  std::optional<GroundTruth> truth;

  int robot_count() const;
};

Dataset make_dataset(const GroundTruth& truth, const NoiseConfig& noise);

/// Throws std::runtime_error naming the offending line on parse or
/// validation (non-monotone timestamps) failures.
Dataset read_dataset(const std::string& path);
Dataset read_dataset(std::istream& in, const std::string& name);

void write_dataset(const Dataset& ds, const std::string& path);
void write_dataset(const Dataset& ds, std::ostream& out);

}  // namespace rslam

#endif  // RSLAM_SCENARIO_HPP_
