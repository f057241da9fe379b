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

#include "rslam/dpgo.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rslam {

std::vector<int> GraphFragment::separator_indices() const {
  std::set<int> ix;
  for (const CrossEdge& e : loops) ix.insert(e.own_index);
  return {ix.begin(), ix.end()};
}

std::optional<int> GraphFragment::index_at(double t, double tol) const {
  const auto it = std::lower_bound(stamps.begin(), stamps.end(), t);
  const int n = static_cast<int>(stamps.size());
  int best = -1;
  if (it != stamps.end()) best = static_cast<int>(it - stamps.begin());
  if (it != stamps.begin()) {
    const int lo = static_cast<int>(it - stamps.begin()) - 1;
    if (best < 0 || std::abs(stamps[lo] - t) < std::abs(stamps[best] - t)) best = lo;
  }
  if (best < 0 || best >= n || std::abs(stamps[best] - t) > tol) return std::nullopt;
  return best;
}

std::optional<int> GraphFragment::index_of_grid_id(int grid_id) const {
  const auto it = std::lower_bound(grid_ids.begin(), grid_ids.end(), grid_id);
  if (it == grid_ids.end() || *it != grid_id) return std::nullopt;
  return static_cast<int>(it - grid_ids.begin());
}

void DirectChannel::publish(const SeparatorPoseMsg& msg) {
  for (std::size_t r = 0; r < inboxes_.size(); ++r) {
    if (static_cast<RobotId>(r) != msg.sender) inboxes_[r].push_back(msg);
  }
}

std::vector<SeparatorPoseMsg> DirectChannel::collect(RobotId robot) {
  auto out = std::move(inboxes_[robot]);
  inboxes_[robot].clear();
  return out;
}

GraphFragment build_fragment(RobotId robot, const std::vector<OdometrySample>& odometry,
                             const std::vector<LoopClosure>& closures, const NoiseConfig& noise,
                             const DpgoConfig& cfg, int keyframe_stride) {
  if (odometry.empty()) throw std::invalid_argument("build_fragment: empty odometry");
  if (keyframe_stride < 1) throw std::invalid_argument("build_fragment: stride < 1");

  GraphFragment frag;
  frag.robot = robot;
  frag.anchored = (robot == 0);

  for (std::size_t i = 0; i < odometry.size(); i += keyframe_stride) {
    frag.stamps.push_back(odometry[i].t);
    frag.poses.push_back(odometry[i].pose);
  }
  if ((odometry.size() - 1) % keyframe_stride != 0) {
    frag.stamps.push_back(odometry.back().t);
    frag.poses.push_back(odometry.back().pose);
  }
  frag.grid_ids.reserve(frag.stamps.size());
  for (double t : frag.stamps) {
    frag.grid_ids.push_back(static_cast<int>(std::llround(t * noise.odom_rate)));
  }

  const double sigma_t = std::max(noise.odom_trans_sigma, cfg.min_information_sigma);
  const double sigma_r = std::max(noise.odom_rot_sigma, cfg.min_information_sigma);
  for (std::size_t i = 0; i + 1 < frag.poses.size(); ++i) {
    GraphFragment::ChainEdge e;
    e.index = static_cast<int>(i);
    e.rel = between(frag.poses[i], frag.poses[i + 1]);
    // composed step covariance over the samples spanned by the keyframe edge
    const double span = std::max<double>(1.0, std::round((frag.stamps[i + 1] - frag.stamps[i]) *
                                                         noise.odom_rate));
    e.info = Eigen::Vector3d(1.0 / (span * sigma_t * sigma_t), 1.0 / (span * sigma_t * sigma_t),
                             1.0 / (span * sigma_r * sigma_r))
                 .asDiagonal();
    frag.odom.push_back(e);
  }

  const double tol = 0.5 / std::max(noise.odom_rate, 1e-9);
  for (const LoopClosure& lc : closures) {
    if (lc.from != robot && lc.to != robot) continue;
    const auto index = frag.index_at(lc.t, tol);
    if (!index) continue;
    GraphFragment::CrossEdge e;
    e.own_index = *index;
    e.own_is_from = (lc.from == robot);
    e.peer = {e.own_is_from ? lc.to : lc.from,
              static_cast<int>(std::llround(lc.t * noise.odom_rate))};
    e.rel = lc.relative_pose;
    e.info = lc.covariance.inverse();
    frag.loops.push_back(e);
  }
  return frag;
}

double fragment_cost(const GraphFragment& fragment) {
  double cost = 0.0;
  for (const auto& e : fragment.odom) {
    const Eigen::Vector3d err =
        edge_error(e.rel, fragment.poses[e.index], fragment.poses[e.index + 1]);
    cost += err.dot(e.info * err);
  }
  for (const auto& e : fragment.loops) {
    const auto peer = fragment.separators.find(e.peer);
    if (peer == fragment.separators.end()) continue;
    const Pose2d& own = fragment.poses[e.own_index];
    const Eigen::Vector3d err = e.own_is_from ? edge_error(e.rel, own, peer->second)
                                              : edge_error(e.rel, peer->second, own);
    cost += err.dot(e.info * err);
  }
  return cost;
}

namespace {

// The block normal system is block-tridiagonal: chain edges couple
// consecutive nodes and cross edges only touch the diagonal (the peer side
// is held fixed). Solved by block Thomas elimination with 3x3 Cholesky
// pivots; returns false on a non-positive pivot.
bool solve_block_tridiagonal(std::vector<Eigen::Matrix3d> diag,
                             const std::vector<Eigen::Matrix3d>& upper, Eigen::VectorXd& rhs,
                             Eigen::VectorXd& solution) {
  const int m = static_cast<int>(diag.size());
  std::vector<Eigen::LLT<Eigen::Matrix3d>> pivots(m);
  for (int i = 0; i < m; ++i) {
    if (i > 0) {
      const Eigen::Matrix3d w = pivots[i - 1].solve(upper[i - 1]);
      diag[i].noalias() -= upper[i - 1].transpose() * w;
      rhs.segment<3>(3 * i).noalias() -=
          upper[i - 1].transpose() * pivots[i - 1].solve(rhs.segment<3>(3 * (i - 1)));
    }
    pivots[i].compute(diag[i]);
    if (pivots[i].info() != Eigen::Success) return false;
  }
  solution.resize(3 * m);
  solution.segment<3>(3 * (m - 1)) = pivots[m - 1].solve(rhs.segment<3>(3 * (m - 1)));
  for (int i = m - 2; i >= 0; --i) {
    solution.segment<3>(3 * i) =
        pivots[i].solve(rhs.segment<3>(3 * i) -
                        upper[i] * solution.segment<3>(3 * (i + 1)));
  }
  return solution.allFinite();
}

}  // namespace

BlockStepResult local_block_optimize(GraphFragment& fragment, const DpgoConfig& cfg) {
  BlockStepResult result;
  result.cost = fragment_cost(fragment);

  const bool has_known_loop =
      std::any_of(fragment.loops.begin(), fragment.loops.end(), [&](const auto& e) {
        return fragment.separators.count(e.peer) > 0;
      });
  if (!has_known_loop) {
    // chain-only block: the dead-reckoned estimate is already optimal
    return result;
  }

  const int n = static_cast<int>(fragment.poses.size());
  const int fixed = fragment.anchored ? 1 : 0;
  const int m = n - fixed;  // free nodes
  if (m <= 0) return result;
  const auto var = [&](int index) { return index - fixed; };

  const std::vector<Pose2d> start = fragment.poses;
  double lambda = cfg.damping;

  std::vector<Eigen::Matrix3d> diag(m), upper(m > 0 ? m - 1 : 0);
  Eigen::VectorXd rhs(3 * m), dx;

  for (int iter = 0; iter < cfg.inner_iterations; ++iter) {
    for (auto& d : diag) d.setZero();
    for (auto& u : upper) u.setZero();
    rhs.setZero();

    for (const auto& e : fragment.odom) {
      const Pose2d& xi = fragment.poses[e.index];
      const Pose2d& xj = fragment.poses[e.index + 1];
      const Eigen::Vector3d err = edge_error(e.rel, xi, xj);
      Eigen::Matrix3d j_i, j_j;
      edge_jacobians(e.rel, xi, xj, j_i, j_j);
      const bool free_i = !(fragment.anchored && e.index == 0);
      if (free_i) {
        diag[var(e.index)].noalias() += j_i.transpose() * e.info * j_i;
        upper[var(e.index)].noalias() += j_i.transpose() * e.info * j_j;
        rhs.segment<3>(3 * var(e.index)).noalias() -= j_i.transpose() * (e.info * err);
      }
      diag[var(e.index + 1)].noalias() += j_j.transpose() * e.info * j_j;
      rhs.segment<3>(3 * var(e.index + 1)).noalias() -= j_j.transpose() * (e.info * err);
    }
    for (const auto& e : fragment.loops) {
      const auto peer = fragment.separators.find(e.peer);
      if (peer == fragment.separators.end()) continue;
      if (fragment.anchored && e.own_index == 0) continue;
      const Pose2d& own = fragment.poses[e.own_index];
      Eigen::Vector3d err;
      Eigen::Matrix3d j_own, j_other;
      if (e.own_is_from) {
        err = edge_error(e.rel, own, peer->second);
        edge_jacobians(e.rel, own, peer->second, j_own, j_other);
      } else {
        err = edge_error(e.rel, peer->second, own);
        edge_jacobians(e.rel, peer->second, own, j_other, j_own);
      }
      diag[var(e.own_index)].noalias() += j_own.transpose() * e.info * j_own;
      rhs.segment<3>(3 * var(e.own_index)).noalias() -= j_own.transpose() * (e.info * err);
    }

    bool accepted = false;
    bool stationary = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      std::vector<Eigen::Matrix3d> damped = diag;
      for (auto& d : damped) {
        // Marquardt scaling: damping proportional to the local curvature
        d.diagonal() += lambda * d.diagonal().cwiseMax(1e-12);
      }
      Eigen::VectorXd b = rhs;
      if (!solve_block_tridiagonal(std::move(damped), upper, b, dx)) {
        lambda = std::max(lambda * 10.0, 1e-8);
        continue;
      }
      if (dx.norm() < 1e-14) {
        accepted = stationary = true;  // at a stationary point; nothing to apply
        break;
      }
      std::vector<Pose2d> backup = fragment.poses;
      for (int i = fixed; i < n; ++i) {
        Pose2d& p = fragment.poses[i];
        p = Pose2d(p.x + dx(3 * var(i) + 0), p.y + dx(3 * var(i) + 1),
                   p.theta + dx(3 * var(i) + 2));
      }
      const double cost = fragment_cost(fragment);
      if (cost <= result.cost) {
        const double improvement = result.cost - cost;
        if (improvement <= 1e-14 * std::max(result.cost, 1.0)) {
          // flat direction: moving buys nothing, so hold position
          fragment.poses = std::move(backup);
          accepted = stationary = true;
          break;
        }
        result.cost = cost;
        lambda = std::max(lambda * 0.3, cfg.damping);
        accepted = true;
        break;
      }
      fragment.poses = std::move(backup);
      lambda = std::max(lambda * 10.0, 1e-8);
    }
    if (!accepted) {
      result.singular = (iter == 0);
      break;
    }
    if (stationary) break;
  }

  for (int i = 0; i < n; ++i) {
    const double dt = (fragment.poses[i].translation() - start[i].translation()).norm();
    const double dr = std::abs(wrap_angle(fragment.poses[i].theta - start[i].theta));
    result.step_norm = std::max({result.step_norm, dt, dr});
  }
  return result;
}

SeparatorPoseMsg make_separator_msg(const GraphFragment& fragment, long iteration) {
  SeparatorPoseMsg msg;
  msg.sender = fragment.robot;
  msg.iteration = iteration;
  for (int i : fragment.separator_indices()) {
    msg.poses.emplace_back(NodeKey{fragment.robot, fragment.grid_ids[i]}, fragment.poses[i]);
  }
  return msg;
}

void apply_separator_msg(GraphFragment& fragment, const SeparatorPoseMsg& msg) {
  for (const auto& [key, pose] : msg.poses) fragment.separators[key] = pose;
}

RoundResult dpgo_round(std::vector<GraphFragment>& fragments, SeparatorChannel& channel,
                       const DpgoConfig& cfg, long iteration) {
  RoundResult result;
  for (GraphFragment& frag : fragments) {
    for (const SeparatorPoseMsg& msg : channel.collect(frag.robot)) {
      apply_separator_msg(frag, msg);
    }
    const BlockStepResult step = local_block_optimize(frag, cfg);
    result.max_step = std::max(result.max_step, step.step_norm);
    channel.publish(make_separator_msg(frag, iteration));
  }
  result.converged = result.max_step < cfg.step_tolerance;
  return result;
}

int dpgo_solve(std::vector<GraphFragment>& fragments, SeparatorChannel& channel,
               const DpgoConfig& cfg) {
  int rounds = 0;
  for (; rounds < cfg.max_rounds; ++rounds) {
    if (dpgo_round(fragments, channel, cfg, rounds).converged) {
      ++rounds;
      break;
    }
  }
  return rounds;
}

PoseGraph assemble_graph(const std::vector<GraphFragment>& fragments) {
  PoseGraph graph;
  const int n = static_cast<int>(fragments.size());
  graph.stamps.resize(n);
  graph.poses.resize(n);
  for (const GraphFragment& frag : fragments) {
    graph.stamps[frag.robot] = frag.stamps;
    graph.poses[frag.robot] = frag.poses;
    for (const auto& e : frag.odom) {
      graph.edges.push_back({{frag.robot, e.index}, {frag.robot, e.index + 1}, e.rel, e.info,
                             false});
    }
  }
  // cross edges once each, taken from the `from` side; peer grid ids are
  // translated back into array indices
  for (const GraphFragment& frag : fragments) {
    for (const auto& e : frag.loops) {
      if (!e.own_is_from) continue;
      const auto it = std::find_if(fragments.begin(), fragments.end(),
                                   [&](const GraphFragment& f) { return f.robot == e.peer.robot; });
      if (it == fragments.end()) continue;
      const auto idx = it->index_of_grid_id(e.peer.index);
      if (!idx) continue;
      graph.edges.push_back(
          {{frag.robot, e.own_index}, {e.peer.robot, *idx}, e.rel, e.info, true});
    }
  }
  graph.anchor = {0, 0};
  return graph;
}

void anchor_gauge(std::vector<GraphFragment>& fragments) {
  const auto it = std::find_if(fragments.begin(), fragments.end(),
                               [](const GraphFragment& f) { return f.robot == 0; });
  if (it == fragments.end() || it->poses.empty()) return;
  const Pose2d t = inverse(it->poses.front());
  for (GraphFragment& frag : fragments) {
    for (Pose2d& p : frag.poses) p = compose(t, p);
    for (auto& [key, pose] : frag.separators) pose = compose(t, pose);
  }
}

}  // namespace rslam
