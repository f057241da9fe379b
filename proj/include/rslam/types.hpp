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

#ifndef RSLAM_TYPES_HPP_
#define RSLAM_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "rslam/pose2.hpp"
#include "rslam/stats.hpp"

namespace rslam {

/// Dense 0..N-1 robot identifier.
using RobotId = int;

struct OdometrySample {
  double t = 0.0;      // seconds, strictly increasing per robot
  Pose2d pose;         // in the robot's private odometry frame
};

struct RangingMeasurement {
  double t = 0.0;
  RobotId from = 0;    // receiver
  RobotId to = 0;      // peer being ranged
  double distance = 0.0;  // meters, >= 0
};

struct TimedPose {
  double t = 0.0;
  Pose2d pose;
};

/// A timestamped pose sequence with linear position / shortest-arc heading
/// interpolation between samples.
struct Trajectory {
  std::vector<TimedPose> samples;

  bool covers(double t) const {
    return !samples.empty() && t >= samples.front().t - 1e-9 && t <= samples.back().t + 1e-9;
  }

  /// Interpolated pose at time t; exact at sample timestamps.
  Pose2d at(double t) const;

  /// Nearest sample within tol seconds, if any.
  std::optional<TimedPose> nearest(double t, double tol) const;

  /// Total path length traversed between times t0 and t1 (sample polyline).
  double path_length(double t0, double t1) const;
};

/// Per-robot trajectories in one common world frame, all on the same grid.
struct GroundTruth {
  std::vector<Trajectory> robots;

  int robot_count() const { return static_cast<int>(robots.size()); }
};

struct NoiseConfig {
  double odom_trans_sigma = 0.0;  // m per integration step
  double odom_rot_sigma = 0.0;    // rad per integration step
  double uwb_sigma = 0.0;         // m
  double nlos_probability = 0.0;  // in [0, 1]
  double nlos_bias_scale = 0.0;   // m, mean of the positive exponential bias
  double max_range = 100.0;       // m
  double uwb_rate = 50.0;         // Hz
  double odom_rate = 10.0;        // Hz
  std::uint64_t rng_seed = 0;
};

/// An estimated relative pose between two robots at one time instant.
struct LoopClosure {
  RobotId from = 0;        // alpha: the frame the pose is expressed in
  RobotId to = 0;          // beta
  double t = 0.0;
  Pose2d relative_pose;    // pose of `to` in `from`'s frame at time t
  Covariance3 covariance = Covariance3::Identity();
  double residual = 0.0;   // meters^2, windowed ranging residual at the estimate
  int window_size = 0;
};

}  // namespace rslam

#endif  // RSLAM_TYPES_HPP_
