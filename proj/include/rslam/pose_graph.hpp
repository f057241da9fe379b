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

#ifndef RSLAM_POSE_GRAPH_HPP_
#define RSLAM_POSE_GRAPH_HPP_

#include <Eigen/Core>

#include <compare>
#include <vector>

#include "rslam/types.hpp"

namespace rslam {

struct NodeKey {
  RobotId robot = 0;
  int index = 0;

  auto operator<=>(const NodeKey&) const = default;
};

/// Relative-pose constraint i -> j with information matrix (inverse
/// covariance) over (x, y, theta).
struct GraphEdge {
  NodeKey from;
  NodeKey to;
  Pose2d rel;  // measured between(pose(from), pose(to))
  Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
  bool is_loop = false;  // cross-robot closure edge vs odometry chain edge
};

/// Multi-robot pose graph: per-robot node chains plus odometry and loop
/// edges; the anchor node stays fixed during optimization.
struct PoseGraph {
  std::vector<std::vector<double>> stamps;  // [robot][index]
  std::vector<std::vector<Pose2d>> poses;   // [robot][index]
  std::vector<GraphEdge> edges;
  NodeKey anchor{0, 0};

  int robot_count() const { return static_cast<int>(poses.size()); }
  int node_count() const;
  Pose2d& pose(NodeKey k) { return poses[k.robot][k.index]; }
  const Pose2d& pose(NodeKey k) const { return poses[k.robot][k.index]; }
};

/// Residual of one relative-pose constraint at the given endpoint
/// estimates: between(z, between(xi, xj)) as (x, y, wrapped theta).
Eigen::Vector3d edge_error(const Pose2d& z, const Pose2d& xi, const Pose2d& xj);

/// Analytic Jacobians of edge_error with respect to (x, y, theta) of each
/// endpoint.
void edge_jacobians(const Pose2d& z, const Pose2d& xi, const Pose2d& xj, Eigen::Matrix3d& j_i,
                    Eigen::Matrix3d& j_j);

/// Sum of squared Mahalanobis edge residuals.
double graph_cost(const PoseGraph& graph);

/// Re-derives every node estimate by chaining odometry edges from each
/// robot's first-node estimate (loop edges ignored).
void dead_reckon(PoseGraph& graph);

/// Left-multiplies every pose so the anchor node becomes identity.
void anchor_gauge(PoseGraph& graph);

struct SolveResult {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;      // on the update norm
  double relative_cost_tolerance = 1e-12;
};

/// Batch Levenberg-Marquardt over all poses with the anchor fixed
/// (reference solver, used in tests and benchmarks). Throws
/// std::runtime_error listing unreachable nodes if the graph is not
/// connected through the anchor.
SolveResult centralized_solve(PoseGraph& graph, const SolveOptions& opts = {});

}  // namespace rslam

#endif  // RSLAM_POSE_GRAPH_HPP_
