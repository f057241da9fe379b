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

#ifndef RSLAM_PCM_HPP_
#define RSLAM_PCM_HPP_

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "rslam/types.hpp"

namespace rslam {

/// Nearest-sample odometry lookup, one frame per robot.
class OdometryProvider {
 public:
  virtual ~OdometryProvider() = default;
  /// Pose of `robot` in its own odometry frame at the sample nearest to t
  /// (within one sample period), or nullopt if no such sample exists.
  virtual std::optional<Pose2d> pose_at(RobotId robot, double t) const = 0;
};

/// OdometryProvider over in-memory sample logs.
class OdometryLog : public OdometryProvider {
 public:
  explicit OdometryLog(double match_tolerance = 0.1) : tol_(match_tolerance) {}

  void append(RobotId robot, const OdometrySample& sample);
  void set(RobotId robot, std::vector<OdometrySample> samples);
  std::optional<Pose2d> pose_at(RobotId robot, double t) const override;

 private:
  double tol_;
  std::vector<std::vector<OdometrySample>> logs_;
};

struct PcmConfig {
  double epsilon = 0.1;  // significance level in (0, 1)
  int dof = 3;
  // adaptive: gate each pair with the first-order covariance of its cycle
  // error, propagated from the two closures' own covariances (plus the
  // floor below); otherwise use the fixed `sigma`
  bool adaptive_sigma = true;
  Covariance3 sigma_floor = (Eigen::Vector3d(4e-4, 4e-4, 1e-4)).asDiagonal();
  Covariance3 sigma = (Eigen::Vector3d(0.25, 0.25, 0.0225)).asDiagonal();
  int exact_cap = 60;  // largest graph solved exactly
};

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Pairwise-consistency graph over the loop closures of one ordered robot
/// pair; nodes are kept time-ordered and the adjacency stays symmetric with
/// a true diagonal.
struct ConsistencyGraph {
  std::vector<LoopClosure> nodes;
  Adjacency adjacency;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Squared-Mahalanobis gate on the cycle formed by two loop closures and
/// the two odometry segments between their timestamps. Throws if the
/// closures do not connect the same ordered robot pair.
bool pairwise_consistent(const LoopClosure& lc_k, const LoopClosure& lc_i,
                         const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik,
                         const PcmConfig& cfg);

/// The cycle error itself (x, y, wrapped theta), exposed for diagnostics.
Eigen::Vector3d cycle_error(const LoopClosure& lc_k, const LoopClosure& lc_i,
                            const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik);

/// Covariance the cycle error is gated against: the fixed config matrix, or
/// the first-order propagation of both closures' covariances through the
/// cycle when cfg.adaptive_sigma is set.
Covariance3 cycle_gate_covariance(const LoopClosure& lc_k, const LoopClosure& lc_i,
                                  const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik,
                                  const PcmConfig& cfg);

/// Inserts one closure in time order, computing only its row/column of the
/// adjacency (O(n) checks). Pairs whose odometry segments cannot be
/// reconstructed are treated as inconsistent.
void insert_closure(ConsistencyGraph& graph, const LoopClosure& closure,
                    const OdometryProvider& odometry, const PcmConfig& cfg);

/// Maximum clique by branch and bound with a greedy-coloring bound;
/// returns the lexicographically smallest maximum clique (sorted indices).
std::vector<int> max_clique_exact(const Adjacency& adjacency);

/// Greedy heuristic seeded from the previous clique: extend it if possible,
/// otherwise restart from degree-ordered seeds. The result is always a
/// verified clique and never smaller than the (still valid) previous one.
std::vector<int> max_clique_incremental(const Adjacency& adjacency,
                                        const std::vector<int>& previous);

/// Per ordered robot pair: build the consistency graph, solve the clique
/// (exactly up to cfg.exact_cap nodes, heuristically beyond), and return
/// the union of the inlier sets.
std::vector<LoopClosure> filter_inliers(const std::vector<LoopClosure>& closures,
                                        const OdometryProvider& odometry, const PcmConfig& cfg);

/// Text grid of the adjacency matrix ('1'/'.') for diagnostics.
std::string format_adjacency(const Adjacency& adjacency);

}  // namespace rslam

#endif  // RSLAM_PCM_HPP_
