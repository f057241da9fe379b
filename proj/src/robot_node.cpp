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

#include "rslam/robot_node.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rslam {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Interpolated own-frame pose from an odometry log; callers check coverage.
Pose2d odom_at(const std::vector<OdometrySample>& log, double t) {
  const auto it = std::lower_bound(log.begin(), log.end(), t,
                                   [](const OdometrySample& s, double v) { return s.t < v; });
  if (it == log.end()) return log.back().pose;
  if (it == log.begin() || it->t == t) return it->pose;
  const OdometrySample& hi = *it;
  const OdometrySample& lo = *std::prev(it);
  const double u = (t - lo.t) / (hi.t - lo.t);
  return Pose2d(lo.pose.x + u * (hi.pose.x - lo.pose.x), lo.pose.y + u * (hi.pose.y - lo.pose.y),
                lo.pose.theta + u * wrap_angle(hi.pose.theta - lo.pose.theta));
}

bool covers(const std::vector<OdometrySample>& log, double t0, double t1, double tol) {
  return !log.empty() && log.front().t <= t0 + tol && log.back().t >= t1 - tol;
}

}  // namespace

int PipelineConfig::effective_window_stride() const {
  if (window_stride > 0) return window_stride;
  const int auto_stride =
      static_cast<int>(std::llround(sensors.uwb_rate / std::max(sensors.odom_rate, 1e-9)));
  return std::max(1, auto_stride);
}

RobotNode::RobotNode(RobotId id, int n_robots, const PipelineConfig& cfg)
    : id_(id), n_robots_(n_robots), cfg_(cfg) {
  neighbors_.resize(n_robots);
  for (int r = 0; r < n_robots; ++r) neighbors_[r].peer = r;
  fragment_.robot = id;
  fragment_.anchored = (id == 0);
  initialized_ = (id == 0);  // robot 0 defines the anchored frame
  // stagger turns by id so each robot sees fresh upstream separator poses
  next_dpgo_time_ = id * (1.0 / std::max(cfg.sensors.uwb_rate, 1e-9));
}

void RobotNode::append_keyframe(const OdometrySample& sample) {
  const bool first = fragment_.poses.empty();
  if (!first && ++pending_keyframe_ < cfg_.keyframe_stride) return;
  pending_keyframe_ = 0;

  // fragment poses live in the anchored frame once initialized; the chain
  // measurement always comes from the own-frame odometry log
  Pose2d node_pose = sample.pose;
  if (!first) {
    GraphFragment::ChainEdge e;
    e.index = static_cast<int>(fragment_.poses.size()) - 1;
    // rel between the previous keyframe sample and this one, in odometry frames
    const double prev_t = fragment_.stamps.back();
    e.rel = between(odom_at(own_odom_, prev_t), sample.pose);
    const double sigma_t = std::max(cfg_.sensors.odom_trans_sigma, cfg_.dpgo.min_information_sigma);
    const double sigma_r = std::max(cfg_.sensors.odom_rot_sigma, cfg_.dpgo.min_information_sigma);
    const double span = std::max(1.0, std::round((sample.t - prev_t) * cfg_.sensors.odom_rate));
    e.info = Eigen::Vector3d(1.0 / (span * sigma_t * sigma_t), 1.0 / (span * sigma_t * sigma_t),
                             1.0 / (span * sigma_r * sigma_r))
                 .asDiagonal();
    fragment_.odom.push_back(e);
    node_pose = compose(fragment_.poses.back(), e.rel);
  }
  fragment_.stamps.push_back(sample.t);
  fragment_.grid_ids.push_back(static_cast<int>(std::llround(sample.t * cfg_.sensors.odom_rate)));
  fragment_.poses.push_back(node_pose);
}

void RobotNode::ingest(const Message& msg) {
  if (msg.receiver != id_) {
    ++malformed_dropped_;
    return;
  }
  if (const auto* odom = std::get_if<OdomWindowPayload>(&msg.payload)) {
    if (msg.sender < 0 || msg.sender >= n_robots_) {
      ++malformed_dropped_;
      return;
    }
    auto& log = neighbors_[msg.sender].odometry;
    for (const OdometrySample& s : odom->samples) {
      if (!log.empty() && s.t <= log.back().t) {
        ++malformed_dropped_;
        continue;
      }
      log.push_back(s);
    }
  } else if (const auto* lc = std::get_if<LoopClosurePayload>(&msg.payload)) {
    const LoopClosure& c = lc->closure;
    if (c.from < 0 || c.to < 0 || c.from >= n_robots_ || c.to >= n_robots_ || c.from == c.to) {
      ++malformed_dropped_;
      return;
    }
    PairState& pair = pairs_[{c.from, c.to}];
    const auto it = std::lower_bound(pair.closures.begin(), pair.closures.end(), c.t,
                                     [](const LoopClosure& a, double t) { return a.t < t; });
    pair.inlier.insert(pair.inlier.begin() + (it - pair.closures.begin()), 0);
    pair.closures.insert(it, c);
  } else if (const auto* verdict = std::get_if<PcmVerdictPayload>(&msg.payload)) {
    const auto found = pairs_.find({verdict->from, verdict->to});
    if (found == pairs_.end()) {
      ++malformed_dropped_;
      return;
    }
    PairState& pair = found->second;
    std::fill(pair.inlier.begin(), pair.inlier.end(), 0);
    for (int idx : verdict->inlier_indices) {
      if (idx >= 0 && idx < static_cast<int>(pair.inlier.size())) pair.inlier[idx] = 1;
    }
  } else if (const auto* sep = std::get_if<SeparatorPoseMsg>(&msg.payload)) {
    apply_separator_msg(fragment_, *sep);
  }
}

void RobotNode::maybe_initialize() {
  if (initialized_) return;
  // a separator pose covering an inlier closure pins this block to the
  // anchored frame
  for (const auto& [key, pair] : pairs_) {
    if (key.first != id_ && key.second != id_) continue;
    for (std::size_t i = 0; i < pair.closures.size(); ++i) {
      if (!pair.inlier[i]) continue;
      const LoopClosure& c = pair.closures[i];
      const RobotId peer = (c.from == id_) ? c.to : c.from;
      const int grid_id = static_cast<int>(std::llround(c.t * cfg_.sensors.odom_rate));
      const auto sep = fragment_.separators.find({peer, grid_id});
      if (sep == fragment_.separators.end()) continue;
      const auto own_index = fragment_.index_of_grid_id(grid_id);
      if (!own_index) continue;
      const Pose2d rel_peer_to_self =
          (c.from == id_) ? inverse(c.relative_pose) : c.relative_pose;
      const Pose2d world_self_t = compose(sep->second, rel_peer_to_self);
      const Pose2d world_tf = compose(world_self_t, inverse(fragment_.poses[*own_index]));
      for (Pose2d& p : fragment_.poses) p = compose(world_tf, p);
      initialized_ = true;
      return;
    }
  }
}

// window of tau rangings spaced window_stride apart, ending at ring index
// `end`; both odometry logs must cover its span
std::optional<RangingWindow> RobotNode::build_window(const NeighborState& peer,
                                                     std::size_t end) const {
  const std::size_t stride = cfg_.effective_window_stride();
  const std::size_t span = static_cast<std::size_t>(cfg_.tau - 1) * stride;
  if (end < span) return std::nullopt;
  const std::size_t begin = end - span;
  const double t_end = peer.rangings[end].t;
  const double t_begin = peer.rangings[begin].t;
  const double tol = 0.5 / std::max(cfg_.sensors.odom_rate, 1e-9);
  if (!covers(own_odom_, t_begin, t_end, tol) || !covers(peer.odometry, t_begin, t_end, tol)) {
    return std::nullopt;
  }
  const Pose2d own_end = odom_at(own_odom_, t_end);
  const Pose2d peer_end = odom_at(peer.odometry, t_end);
  RangingWindow window;
  window.entries.reserve(cfg_.tau);
  for (std::size_t i = begin; i <= end; i += stride) {
    const RangingMeasurement& m = peer.rangings[i];
    WindowEntry e;
    e.t = m.t;
    e.rel_alpha = (i == end) ? Pose2d() : between(own_end, odom_at(own_odom_, m.t));
    e.rel_beta = (i == end) ? Pose2d() : between(peer_end, odom_at(peer.odometry, m.t));
    e.range = m.distance;
    window.entries.push_back(e);
  }
  return window;
}

void RobotNode::try_estimate(NeighborState& peer, std::vector<Message>& outbox) {
  if (own_odom_.empty() || peer.odometry.empty() || peer.rangings.empty()) return;
  // shared odometry lags its sender by a tick: close the window at the
  // newest timestamp both odometry logs actually cover
  const double t_cap = std::min(own_odom_.back().t, peer.odometry.back().t);
  std::size_t end = peer.rangings.size();
  while (end > 0 && peer.rangings[end - 1].t > t_cap + 1e-9) --end;
  if (end == 0) return;
  --end;  // ring index of the window-ending ranging
  const double t_end = peer.rangings[end].t;
  if (t_end - peer.last_estimate_time < cfg_.estimate_period - 1e-9) return;
  const auto window = build_window(peer, end);
  if (!window) return;
  peer.last_estimate_time = t_end;

  const auto t0 = Clock::now();
  const EstimateResult est = estimate_relative_pose(id_, peer.peer, *window, cfg_.estimation);
  timings_.estimate_ms.push_back(ms_since(t0));
  if (!est.ok()) return;
  ++raw_closures_;

  PairState& pair = pairs_[{id_, peer.peer}];
  pair.closures.push_back(est.closure);
  pair.inlier.push_back(0);

  // consistency check + clique over this pair's closures
  const auto t1 = Clock::now();
  OdometryLog odometry(0.5 / std::max(cfg_.sensors.odom_rate, 1e-9));
  odometry.set(id_, own_odom_);
  odometry.set(peer.peer, peer.odometry);
  // closures arrive in time order, so the insert appends and the previous
  // clique's indices stay valid; the online path always runs the heuristic
  insert_closure(pair.graph, est.closure, odometry, cfg_.pcm);
  pair.clique = max_clique_incremental(pair.graph.adjacency, pair.clique);
  // graph nodes and pair.closures share the same time order
  std::fill(pair.inlier.begin(), pair.inlier.end(), 0);
  for (int idx : pair.clique) pair.inlier[idx] = 1;
  timings_.pcm_ms.push_back(ms_since(t1));

  Message closure_msg{id_, peer.peer, t_end, LoopClosurePayload{est.closure}};
  Message verdict_msg{id_, peer.peer, t_end, PcmVerdictPayload{id_, peer.peer, pair.clique}};
  bytes_sent_ += closure_msg.size_bytes() + verdict_msg.size_bytes();
  outbox.push_back(std::move(closure_msg));
  outbox.push_back(std::move(verdict_msg));
}

void RobotNode::rebuild_loop_edges() {
  fragment_.loops.clear();
  for (const auto& [key, pair] : pairs_) {
    if (key.first != id_ && key.second != id_) continue;
    for (std::size_t i = 0; i < pair.closures.size(); ++i) {
      if (!pair.inlier[i]) continue;
      const LoopClosure& c = pair.closures[i];
      const double tol = 0.5 / std::max(cfg_.sensors.odom_rate, 1e-9);
      const auto index = fragment_.index_at(c.t, tol);
      if (!index) continue;
      GraphFragment::CrossEdge e;
      e.own_index = *index;
      e.own_is_from = (c.from == id_);
      e.peer = {e.own_is_from ? c.to : c.from,
                static_cast<int>(std::llround(c.t * cfg_.sensors.odom_rate))};
      e.rel = c.relative_pose;
      e.info = c.covariance.inverse();
      fragment_.loops.push_back(e);
    }
  }
}

std::vector<Message> RobotNode::dpgo_turn(double now) {
  std::vector<Message> outbox;
  maybe_initialize();
  if (!initialized_) return outbox;

  const auto t0 = Clock::now();
  rebuild_loop_edges();
  const BlockStepResult step = local_block_optimize(fragment_, cfg_.dpgo);
  last_dpgo_step_ = step.step_norm;
  timings_.dpgo_ms.push_back(ms_since(t0));

  // share separator poses with every peer we hold a cross edge with
  std::vector<char> peer_has_edge(n_robots_, 0);
  for (const auto& e : fragment_.loops) peer_has_edge[e.peer.robot] = 1;
  const SeparatorPoseMsg sep = make_separator_msg(fragment_, std::llround(now * 1e6));
  if (!sep.poses.empty()) {
    for (RobotId r = 0; r < n_robots_; ++r) {
      if (!peer_has_edge[r] || r == id_) continue;
      Message msg{id_, r, now, sep};
      bytes_sent_ += msg.size_bytes();
      outbox.push_back(std::move(msg));
    }
  }
  return outbox;
}

std::vector<Message> RobotNode::convergence_turn(double now, std::vector<Message> inbox) {
  for (const Message& msg : inbox) ingest(msg);
  return dpgo_turn(now);
}

std::vector<Message> RobotNode::tick(double now, const std::optional<OdometrySample>& odometry,
                                     const std::vector<RangingMeasurement>& rangings,
                                     std::vector<Message> inbox) {
  std::vector<Message> outbox;
  for (const Message& msg : inbox) ingest(msg);
  maybe_initialize();

  if (odometry) {
    own_odom_.push_back(*odometry);
    append_keyframe(*odometry);
  }

  // ring keeps a little slack beyond the window span: the freshest rangings
  // may still lack peer odometry coverage and must not evict usable ones
  const int capacity = (cfg_.tau - 1) * cfg_.effective_window_stride() + 1 +
                       static_cast<int>(std::ceil(2.0 * cfg_.sensors.uwb_rate /
                                                  std::max(cfg_.sensors.odom_rate, 1e-9))) +
                       4;
  for (const RangingMeasurement& m : rangings) {
    if (m.from != id_ || m.to < 0 || m.to >= n_robots_) continue;
    NeighborState& peer = neighbors_[m.to];
    peer.rangings.push_back(m);
    while (static_cast<int>(peer.rangings.size()) > capacity) peer.rangings.pop_front();
    peer.last_ranging_time = now;
  }

  // incremental odometry sharing toward each in-contact pair owner
  if (odometry) {
    const double contact_window = 2.0 / std::max(cfg_.sensors.uwb_rate, 1e-9);
    for (RobotId r = 0; r < n_robots_; ++r) {
      if (r == id_ || owns_pair(r)) continue;  // share only toward the pair owner (lower id)
      NeighborState& peer = neighbors_[r];
      if (now - peer.last_ranging_time > contact_window) continue;
      if (peer.shared_up_to >= static_cast<int>(own_odom_.size())) continue;
      OdomWindowPayload payload;
      payload.samples.assign(own_odom_.begin() + peer.shared_up_to, own_odom_.end());
      peer.shared_up_to = static_cast<int>(own_odom_.size());
      Message msg{id_, r, now, std::move(payload)};
      bytes_sent_ += msg.size_bytes();
      outbox.push_back(std::move(msg));
    }
  }

  // closure attempts for owned pairs
  for (RobotId r = 0; r < n_robots_; ++r) {
    if (r == id_ || !owns_pair(r)) continue;
    try_estimate(neighbors_[r], outbox);
  }

  if (now + 1e-9 >= next_dpgo_time_) {
    auto msgs = dpgo_turn(now);
    outbox.insert(outbox.end(), std::make_move_iterator(msgs.begin()),
                  std::make_move_iterator(msgs.end()));
    const double period = 1.0 / std::max(cfg_.dpgo.update_rate, 1e-9);
    while (next_dpgo_time_ <= now + 1e-9) next_dpgo_time_ += period;
  }
  return outbox;
}

NodeSnapshot RobotNode::snapshot() const {
  NodeSnapshot snap;
  snap.robot = id_;
  snap.initialized = initialized_;
  snap.trajectory.reserve(fragment_.poses.size());
  for (std::size_t i = 0; i < fragment_.poses.size(); ++i) {
    snap.trajectory.push_back({fragment_.stamps[i], fragment_.poses[i]});
  }
  snap.raw_closures = raw_closures_;
  int inliers = 0;
  int last_clique = 0;
  for (const auto& [key, pair] : pairs_) {
    if (key.first != id_) continue;  // owner-side counts
    inliers += static_cast<int>(std::count(pair.inlier.begin(), pair.inlier.end(), 1));
    last_clique = std::max(last_clique, static_cast<int>(pair.clique.size()));
  }
  snap.inlier_closures = inliers;
  snap.last_clique_size = last_clique;
  snap.bytes_sent = bytes_sent_;
  snap.malformed_dropped = malformed_dropped_;
  snap.last_dpgo_step = last_dpgo_step_;
  return snap;
}

std::vector<std::pair<std::pair<RobotId, RobotId>, std::string>> RobotNode::adjacency_dumps()
    const {
  std::vector<std::pair<std::pair<RobotId, RobotId>, std::string>> out;
  for (const auto& [key, pair] : pairs_) {
    if (key.first != id_ || pair.graph.size() == 0) continue;
    out.emplace_back(key, format_adjacency(pair.graph.adjacency));
  }
  return out;
}

std::vector<LoopClosure> RobotNode::owned_closures(bool inliers_only) const {
  std::vector<LoopClosure> out;
  for (const auto& [key, pair] : pairs_) {
    if (key.first != id_) continue;
    for (std::size_t i = 0; i < pair.closures.size(); ++i) {
      if (!inliers_only || pair.inlier[i]) out.push_back(pair.closures[i]);
    }
  }
  return out;
}

}  // namespace rslam
