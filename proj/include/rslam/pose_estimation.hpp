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

#ifndef RSLAM_POSE_ESTIMATION_HPP_
#define RSLAM_POSE_ESTIMATION_HPP_

#include <vector>

#include "rslam/types.hpp"

namespace rslam {

/// One ranging sample together with both robots' odometry-relative poses,
/// expressed with respect to the window end time t (the last entry holds
/// identity relative poses).
struct WindowEntry {
  double t = 0.0;
  Pose2d rel_alpha;  // (pose_alpha at window end)^-1 (+) pose_alpha at entry time
  Pose2d rel_beta;
  double range = 0.0;
};

struct RangingWindow {
  std::vector<WindowEntry> entries;  // time-ordered

  bool empty() const { return entries.empty(); }
  int size() const { return static_cast<int>(entries.size()); }
  double end_time() const { return entries.back().t; }
  double latest_range() const { return entries.back().range; }

  /// Path length traversed by either robot across the window (m).
  double excitation_alpha() const;
  double excitation_beta() const;
};

/// Polar search grid: bearing phi and relative heading theta both stepped
/// by delta over (-pi, pi], radius fixed by the window's latest ranging.
struct SearchConfig {
  double delta = 0.1;  // rad, must satisfy 0 < delta <= pi

  /// Steps to each side of zero; the full grid has (2*steps()+1)^2 candidates.
  int steps() const;
  /// When true, the candidate circle radius is the median of the window's
  /// rangings instead of the latest sample.
  bool median_radius = false;
};

/// Sum over the window of squared (ranging minus predicted inter-robot
/// distance) for the candidate relative pose. Throws on an empty window.
double window_residual(const Pose2d& candidate, const RangingWindow& window);

struct CoarseResult {
  Pose2d pose;
  double residual = 0.0;  // m^2
  int i_phi = 0;          // grid indices of the winning candidate
  int i_theta = 0;
};

/// Grid argmin of window_residual over the polar candidate set, with an
/// early-abort partial-sum bound. Ties resolve to the first candidate in
/// loop order (phi outer, theta inner, both ascending), which makes the
/// result identical to an exhaustive scan.
CoarseResult coarse_search(const RangingWindow& window, const SearchConfig& cfg);

struct RefineResult {
  Pose2d pose;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Damped Gauss-Newton on (x, y, theta). The returned residual never
/// exceeds the initial one; non-convergence is reported via the flag.
RefineResult refine(const Pose2d& initial, const RangingWindow& window);

struct EstimationConfig {
  SearchConfig search;
  int min_window = 10;           // samples
  double min_excitation = 0.02;  // m of path per robot within the window
  // closure covariance: fitted from the window geometry (s^2 (J^T J)^-1 at
  // the optimum, s floored at residual_floor) or the fixed diagonal below
  bool fitted_covariance = true;
  double residual_floor = 0.01;   // m, per-sample ranging error floor
  double sigma_trans = 0.5;      // fixed covariance, m
  double sigma_rot = 0.15;       // fixed covariance, rad
};

enum class EstimateStatus {
  kOk,
  kWindowTooShort,  // fewer than min_window entries
  kDegenerate,      // not enough motion in the window to pin the pose
};

struct EstimateResult {
  EstimateStatus status = EstimateStatus::kOk;
  LoopClosure closure;  // valid only when status == kOk

  bool ok() const { return status == EstimateStatus::kOk; }
};

/// Coarse search followed by refinement; fills the closure covariance from
/// the configured sigmas. Skipped (not fatal) when the window is too short
/// or unobservable.
EstimateResult estimate_relative_pose(RobotId from, RobotId to, const RangingWindow& window,
                                      const EstimationConfig& cfg);

/// Mean residual (residual / window size) for every grid candidate,
/// row-major over i_phi then i_theta; exportable as a heatmap.
struct ResidualGrid {
  int steps = 0;  // grid spans [-steps, steps] on both axes
  double delta = 0.0;
  std::vector<double> mean_residual;  // (2*steps+1)^2 values

  int side() const { return 2 * steps + 1; }
  double value(int i_phi, int i_theta) const {
    return mean_residual[(i_phi + steps) * side() + (i_theta + steps)];
  }
};

ResidualGrid residual_grid(const RangingWindow& window, const SearchConfig& cfg);

struct GridMinimum {
  int i_phi = 0;
  int i_theta = 0;
  double value = 0.0;
};

/// Strict local minima of the grid under the 8-neighborhood, with
/// wrap-around on both (periodic) axes.
std::vector<GridMinimum> grid_local_minima(const ResidualGrid& grid);

}  // namespace rslam

#endif  // RSLAM_POSE_ESTIMATION_HPP_
