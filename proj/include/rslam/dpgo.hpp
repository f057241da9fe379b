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

#ifndef RSLAM_DPGO_HPP_
#define RSLAM_DPGO_HPP_

#include <map>
#include <vector>

#include "rslam/pose_graph.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct DpgoConfig {
  int max_rounds = 1000;
  double step_tolerance = 1e-6;  // m / rad, per-pose update norm
  double update_rate = 1.0;      // Hz, how often in-pipeline rounds run
  double damping = 1e-9;         // initial Levenberg damping per block solve
  int inner_iterations = 3;      // Gauss-Newton steps per block turn
  // information floor: zero configured sensor noise still yields finite edge weights
  double min_information_sigma = 1e-4;
};

/// One robot's slice of the pose graph: its own chain plus the cross-robot
/// edges it participates in, with neighbor poses known only through
/// received separator messages.
///
/// Nodes are published under NodeKey{robot, grid_id} where the grid id is
/// round(t * odom_rate): every robot derives the same key for the same
/// timestamp, so cross edges resolve without extra exchange.
struct GraphFragment {
  RobotId robot = 0;
  bool anchored = false;  // first pose held fixed (the gauge robot)

  std::vector<double> stamps;
  std::vector<int> grid_ids;  // canonical timestamp grid id per node
  std::vector<Pose2d> poses;

  struct ChainEdge {
    int index = 0;  // constrains index -> index + 1
    Pose2d rel;
    Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
  };
  std::vector<ChainEdge> odom;

  struct CrossEdge {
    int own_index = 0;
    NodeKey peer;
    Pose2d rel;  // measured between(from, to) with `own_is_from` orienting it
    Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
    bool own_is_from = true;
  };
  std::vector<CrossEdge> loops;

  std::map<NodeKey, Pose2d> separators;  // latest received neighbor estimates

  /// Indices of own nodes incident to a cross-robot edge.
  std::vector<int> separator_indices() const;
  /// Node index whose stamp matches t within tol, if any.
  std::optional<int> index_at(double t, double tol) const;
  /// Node index holding the given canonical grid id, if any.
  std::optional<int> index_of_grid_id(int grid_id) const;
};

/// Poses of nodes incident to cross-robot edges, the only state exchanged
/// during distributed optimization.
struct SeparatorPoseMsg {
  RobotId sender = 0;
  long iteration = 0;
  std::vector<std::pair<NodeKey, Pose2d>> poses;
};

/// Transport abstraction for separator exchange; the simulation backs this
/// with the message-passing network, tests with a direct in-memory bus.
class SeparatorChannel {
 public:
  virtual ~SeparatorChannel() = default;
  virtual void publish(const SeparatorPoseMsg& msg) = 0;
  virtual std::vector<SeparatorPoseMsg> collect(RobotId robot) = 0;
};

/// Loss-free in-memory broadcast channel.
class DirectChannel : public SeparatorChannel {
 public:
  explicit DirectChannel(int n_robots) : inboxes_(n_robots) {}
  void publish(const SeparatorPoseMsg& msg) override;
  std::vector<SeparatorPoseMsg> collect(RobotId robot) override;

 private:
  std::vector<std::vector<SeparatorPoseMsg>> inboxes_;
};

/// Chains odometry into a fragment: one node per keyframe (every
/// `keyframe_stride`-th sample), edges weighted by the composed step noise,
/// then attaches the given cross-robot closures. Closures whose timestamp
/// matches no keyframe (within half a sample period) are dropped.
GraphFragment build_fragment(RobotId robot, const std::vector<OdometrySample>& odometry,
                             const std::vector<LoopClosure>& closures, const NoiseConfig& noise,
                             const DpgoConfig& cfg, int keyframe_stride = 1);

/// Local cost of the fragment: own chain edges plus cross edges whose peer
/// pose is known.
double fragment_cost(const GraphFragment& fragment);

struct BlockStepResult {
  double step_norm = 0.0;  // max per-pose change (translation m or rotation rad)
  double cost = 0.0;       // local cost after the step
  bool singular = false;   // normal equations stayed singular; poses unchanged
};

/// Damped Gauss-Newton on this robot's own poses with every neighbor pose
/// held fixed; the local cost never increases.
BlockStepResult local_block_optimize(GraphFragment& fragment, const DpgoConfig& cfg);

SeparatorPoseMsg make_separator_msg(const GraphFragment& fragment, long iteration);
void apply_separator_msg(GraphFragment& fragment, const SeparatorPoseMsg& msg);

struct RoundResult {
  double max_step = 0.0;
  bool converged = false;
};

/// One block-coordinate sweep: robots take turns in id order, each
/// optimizing its own block and broadcasting its separator poses.
RoundResult dpgo_round(std::vector<GraphFragment>& fragments, SeparatorChannel& channel,
                       const DpgoConfig& cfg, long iteration);

/// Rounds until every robot's step norm drops below tolerance (or
/// cfg.max_rounds). Returns the number of rounds run.
int dpgo_solve(std::vector<GraphFragment>& fragments, SeparatorChannel& channel,
               const DpgoConfig& cfg);

/// Assembles the centralized view of a fragment set (for oracles, metrics
/// and diagnostics). Cross edges are deduplicated by their owning side.
PoseGraph assemble_graph(const std::vector<GraphFragment>& fragments);

/// Left-multiplies all fragment poses (and separator caches) so that robot
/// 0's first pose is identity.
void anchor_gauge(std::vector<GraphFragment>& fragments);

}  // namespace rslam

#endif  // RSLAM_DPGO_HPP_
