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

#ifndef RSLAM_ROBOT_NODE_HPP_
#define RSLAM_ROBOT_NODE_HPP_

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "rslam/dpgo.hpp"
#include "rslam/network.hpp"
#include "rslam/pcm.hpp"
#include "rslam/pose_estimation.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct PipelineConfig {
  int tau = 50;                 // ranging samples per estimation window
  EstimationConfig estimation;  // delta, excitation gates, closure covariance
  PcmConfig pcm;
  DpgoConfig dpgo;
  NoiseConfig sensors;          // rates and noise scales (edge weights, grid ids)
  double estimate_period = 1.0; // s between closure attempts per neighbor
  int keyframe_stride = 1;      // odometry samples per graph node
  // every window_stride-th ranging enters the window, stretching its time
  // span; 0 picks uwb_rate / odom_rate so entries align with odometry
  // samples
  int window_stride = 0;

  int effective_window_stride() const;
};

/// Ranging / shared-odometry bookkeeping for one peer robot.
struct NeighborState {
  RobotId peer = 0;
  std::deque<RangingMeasurement> rangings;  // ring over the window span
  std::vector<OdometrySample> odometry;     // received incrementally
  double last_ranging_time = -1e30;
  double last_estimate_time = -1e30;
  int shared_up_to = 0;  // own odometry samples already sent to this peer
};

struct NodeSnapshot {
  RobotId robot = 0;
  bool initialized = false;  // pose block expressed in the anchored frame
  std::vector<TimedPose> trajectory;
  int raw_closures = 0;
  int inlier_closures = 0;
  int last_clique_size = 0;
  std::int64_t bytes_sent = 0;
  int malformed_dropped = 0;
  double last_dpgo_step = 0.0;
};

/// One robot of the team. A node owns only its own state; everything it
/// knows about peers arrived as Messages, and everything it tells them
/// leaves through the returned outbox.
class RobotNode {
 public:
  RobotNode(RobotId id, int n_robots, const PipelineConfig& cfg);

  /// Advances the node to `now`: ingests the inbox, its own odometry sample
  /// and rangings received at `now`, runs estimation / PCM when scheduled,
  /// and takes its distributed-optimization turn when scheduled.
  std::vector<Message> tick(double now, const std::optional<OdometrySample>& odometry,
                            const std::vector<RangingMeasurement>& rangings,
                            std::vector<Message> inbox);

  /// One distributed-optimization turn outside the schedule (used by the
  /// driver for final convergence rounds).
  std::vector<Message> dpgo_turn(double now);

  /// Ingests the inbox and takes an optimization turn unconditionally.
  std::vector<Message> convergence_turn(double now, std::vector<Message> inbox);

  double last_dpgo_step() const { return last_dpgo_step_; }

  NodeSnapshot snapshot() const;

  RobotId id() const { return id_; }
  const GraphFragment& fragment() const { return fragment_; }

  /// Closures for the pairs this node owns, with current inlier verdicts.
  std::vector<LoopClosure> owned_closures(bool inliers_only) const;

  /// Consistency-matrix text grids for the pairs this node owns.
  std::vector<std::pair<std::pair<RobotId, RobotId>, std::string>> adjacency_dumps() const;

  /// Wall-clock durations of pipeline stages, for reporting only.
  struct OpTimings {
    std::vector<double> estimate_ms;
    std::vector<double> pcm_ms;
    std::vector<double> dpgo_ms;
  };
  const OpTimings& timings() const { return timings_; }

 private:
  struct PairState {
    std::vector<LoopClosure> closures;  // time-ordered
    std::vector<char> inlier;           // verdict marks, same length
    ConsistencyGraph graph;             // owner side only
    std::vector<int> clique;            // owner side only
  };

  bool owns_pair(RobotId peer) const { return id_ < peer; }
  void ingest(const Message& msg);
  void maybe_initialize();
  void try_estimate(NeighborState& peer, std::vector<Message>& outbox);
  std::optional<RangingWindow> build_window(const NeighborState& peer, std::size_t end) const;
  void rebuild_loop_edges();
  void append_keyframe(const OdometrySample& sample);

  RobotId id_;
  int n_robots_;
  PipelineConfig cfg_;

  std::vector<OdometrySample> own_odom_;
  std::vector<NeighborState> neighbors_;  // indexed by peer id (self entry unused)
  std::map<std::pair<RobotId, RobotId>, PairState> pairs_;

  GraphFragment fragment_;
  bool initialized_ = false;
  int pending_keyframe_ = 0;  // odometry samples since the last keyframe

  double next_dpgo_time_ = 0.0;
  double last_dpgo_step_ = 0.0;
  std::int64_t bytes_sent_ = 0;
  int malformed_dropped_ = 0;
  int raw_closures_ = 0;

  OpTimings timings_;
};

}  // namespace rslam

#endif  // RSLAM_ROBOT_NODE_HPP_
