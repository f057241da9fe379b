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

#include "rslam/pcm.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "rslam/stats.hpp"

namespace rslam {

void OdometryLog::append(RobotId robot, const OdometrySample& sample) {
  if (static_cast<int>(logs_.size()) <= robot) logs_.resize(robot + 1);
  auto& log = logs_[robot];
  if (!log.empty() && sample.t <= log.back().t) {
    throw std::invalid_argument("OdometryLog: timestamps must be strictly increasing");
  }
  log.push_back(sample);
}

void OdometryLog::set(RobotId robot, std::vector<OdometrySample> samples) {
  if (static_cast<int>(logs_.size()) <= robot) logs_.resize(robot + 1);
  logs_[robot] = std::move(samples);
}

std::optional<Pose2d> OdometryLog::pose_at(RobotId robot, double t) const {
  if (robot < 0 || robot >= static_cast<int>(logs_.size())) return std::nullopt;
  const auto& log = logs_[robot];
  if (log.empty()) return std::nullopt;
  const auto it = std::lower_bound(log.begin(), log.end(), t,
                                   [](const OdometrySample& s, double v) { return s.t < v; });
  const OdometrySample* best = nullptr;
  if (it != log.end()) best = &*it;
  if (it != log.begin()) {
    const OdometrySample* lo = &*std::prev(it);
    if (best == nullptr || std::abs(lo->t - t) < std::abs(best->t - t)) best = lo;
  }
  if (best == nullptr || std::abs(best->t - t) > tol_) return std::nullopt;
  return best->pose;
}

Eigen::Vector3d cycle_error(const LoopClosure& lc_k, const LoopClosure& lc_i,
                            const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik) {
  const Pose2d around = compose(compose(odom_alpha_ki, lc_i.relative_pose), odom_beta_ik);
  const Pose2d err = between(lc_k.relative_pose, around);
  return err.vector();
}

Covariance3 cycle_gate_covariance(const LoopClosure& lc_k, const LoopClosure& lc_i,
                                  const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik,
                                  const PcmConfig& cfg) {
  if (!cfg.adaptive_sigma) return cfg.sigma;
  // cycle = between(lc_k, odom_a (+) lc_i (+) odom_b); propagate both
  // closure covariances through its Jacobians (evaluated at consistency,
  // where the translation lever arm of lc_k vanishes)
  const double ck = std::cos(lc_k.relative_pose.theta), sk = std::sin(lc_k.relative_pose.theta);
  const double ca = std::cos(odom_alpha_ki.theta), sa = std::sin(odom_alpha_ki.theta);
  const double ci = std::cos(lc_i.relative_pose.theta), si = std::sin(lc_i.relative_pose.theta);
  Eigen::Matrix2d rk_t, ra, ri_dot;
  rk_t << ck, sk, -sk, ck;
  ra << ca, -sa, sa, ca;
  ri_dot << -si, -ci, ci, -si;

  Eigen::Matrix3d j_k = Eigen::Matrix3d::Zero();
  j_k.topLeftCorner<2, 2>() = -rk_t;
  j_k(2, 2) = -1.0;

  Eigen::Matrix3d j_i = Eigen::Matrix3d::Zero();
  j_i.topLeftCorner<2, 2>() = rk_t * ra;
  j_i.topRightCorner<2, 1>() = rk_t * ra * (ri_dot * odom_beta_ik.translation());
  j_i(2, 2) = 1.0;

  Covariance3 cov = cfg.sigma_floor + j_k * lc_k.covariance * j_k.transpose() +
                    j_i * lc_i.covariance * j_i.transpose();
  return 0.5 * (cov + cov.transpose().eval());
}

bool pairwise_consistent(const LoopClosure& lc_k, const LoopClosure& lc_i,
                         const Pose2d& odom_alpha_ki, const Pose2d& odom_beta_ik,
                         const PcmConfig& cfg) {
  if (lc_k.from != lc_i.from || lc_k.to != lc_i.to) {
    throw std::invalid_argument("pairwise_consistent: closures connect different robot pairs");
  }
  const Eigen::Vector3d err = cycle_error(lc_k, lc_i, odom_alpha_ki, odom_beta_ik);
  const Covariance3 gate = cycle_gate_covariance(lc_k, lc_i, odom_alpha_ki, odom_beta_ik, cfg);
  return mahalanobis_squared(err, gate) <= chi2_quantile(cfg.epsilon, cfg.dof);
}

namespace {

bool consistent_via_odometry(const LoopClosure& lc_k, const LoopClosure& lc_i,
                             const OdometryProvider& odometry, const PcmConfig& cfg) {
  const auto a_k = odometry.pose_at(lc_k.from, lc_k.t);
  const auto a_i = odometry.pose_at(lc_i.from, lc_i.t);
  const auto b_k = odometry.pose_at(lc_k.to, lc_k.t);
  const auto b_i = odometry.pose_at(lc_i.to, lc_i.t);
  if (!a_k || !a_i || !b_k || !b_i) return false;
  const Pose2d odom_alpha_ki = between(*a_k, *a_i);
  const Pose2d odom_beta_ik = between(*b_i, *b_k);
  return pairwise_consistent(lc_k, lc_i, odom_alpha_ki, odom_beta_ik, cfg);
}

}  // namespace

void insert_closure(ConsistencyGraph& graph, const LoopClosure& closure,
                    const OdometryProvider& odometry, const PcmConfig& cfg) {
  if (!graph.nodes.empty() &&
      (graph.nodes.front().from != closure.from || graph.nodes.front().to != closure.to)) {
    throw std::invalid_argument("insert_closure: robot pair mismatch");
  }
  const auto it =
      std::lower_bound(graph.nodes.begin(), graph.nodes.end(), closure.t,
                       [](const LoopClosure& lc, double t) { return lc.t < t; });
  const int pos = static_cast<int>(it - graph.nodes.begin());
  const int n = graph.size();

  std::vector<bool> row(n);
  for (int j = 0; j < n; ++j) {
    row[j] = consistent_via_odometry(graph.nodes[j], closure, odometry, cfg);
  }

  Adjacency next(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    const int si = i < pos ? i : i - 1;
    for (int j = 0; j <= n; ++j) {
      const int sj = j < pos ? j : j - 1;
      if (i == pos && j == pos) {
        next(i, j) = true;
      } else if (i == pos) {
        next(i, j) = row[sj];
      } else if (j == pos) {
        next(i, j) = row[si];
      } else {
        next(i, j) = graph.adjacency(si, sj);
      }
    }
  }
  graph.nodes.insert(it, closure);
  graph.adjacency = std::move(next);
}

namespace {

// Branch and bound (Tomita-style greedy coloring bound) for the size of the
// largest clique within `candidates`, all of which must extend `base_size`.
class CliqueBound {
 public:
  explicit CliqueBound(const Adjacency& adj) : adj_(adj) {}

  int max_size(std::vector<int> candidates, int floor_size) {
    best_ = floor_size;
    expand(0, std::move(candidates));
    return best_;
  }

 private:
  void expand(int depth, std::vector<int> cand) {
    if (cand.empty()) {
      best_ = std::max(best_, depth);
      return;
    }
    // greedy coloring: color[i] is an upper bound on the clique within
    // cand[0..i]; process high colors first
    std::vector<int> color(cand.size());
    {
      std::vector<std::vector<int>> classes;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        const int v = cand[i];
        std::size_t k = 0;
        for (; k < classes.size(); ++k) {
          bool clash = false;
          for (int u : classes[k]) {
            if (adj_(u, v)) {
              clash = true;
              break;
            }
          }
          if (!clash) break;
        }
        if (k == classes.size()) classes.emplace_back();
        classes[k].push_back(v);
        color[i] = static_cast<int>(k) + 1;
      }
      // reorder candidates by color ascending so the tail has the high bounds
      std::vector<int> order(cand.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return color[a] < color[b]; });
      std::vector<int> cand2(cand.size());
      std::vector<int> color2(cand.size());
      for (std::size_t i = 0; i < order.size(); ++i) {
        cand2[i] = cand[order[i]];
        color2[i] = color[order[i]];
      }
      cand  = std::move(cand2);
      color = std::move(color2);
    }
    for (int i = static_cast<int>(cand.size()) - 1; i >= 0; --i) {
      if (depth + color[i] <= best_) return;  // bound: nothing better possible
      const int v = cand[i];
      std::vector<int> next;
      next.reserve(i);
      for (int j = 0; j < i; ++j) {
        if (adj_(cand[j], v)) next.push_back(cand[j]);
      }
      expand(depth + 1, std::move(next));
    }
  }

  const Adjacency& adj_;
  int best_ = 0;
};

bool adjacent_to_all(const Adjacency& adj, int v, const std::vector<int>& set) {
  for (int u : set) {
    if (u != v && !adj(u, v)) return false;
  }
  return true;
}

bool is_clique(const Adjacency& adj, const std::vector<int>& set) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      if (!adj(set[i], set[j])) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<int> max_clique_exact(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return {};
  CliqueBound bound(adjacency);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  const int omega = bound.max_size(all, 0);

  // lexicographically smallest maximum clique: commit the smallest vertex
  // that still admits a completion to size omega
  std::vector<int> clique;
  std::vector<int> cand = all;
  while (static_cast<int>(clique.size()) < omega) {
    for (int v : cand) {
      std::vector<int> rest;
      for (int u : cand) {
        if (u > v && adjacency(u, v)) rest.push_back(u);
      }
      CliqueBound sub(adjacency);
      const int extend = sub.max_size(rest, 0);
      if (static_cast<int>(clique.size()) + 1 + extend >= omega) {
        clique.push_back(v);
        cand = std::move(rest);
        break;
      }
    }
  }
  return clique;
}

std::vector<int> max_clique_incremental(const Adjacency& adjacency,
                                        const std::vector<int>& previous) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<int> best;
  if (is_clique(adjacency, previous)) best = previous;

  // try to extend the previous clique with any compatible vertex
  std::vector<int> extended = best;
  for (int v = 0; v < n; ++v) {
    if (std::find(extended.begin(), extended.end(), v) != extended.end()) continue;
    if (adjacent_to_all(adjacency, v, extended)) extended.push_back(v);
  }
  std::sort(extended.begin(), extended.end());
  const bool grew = extended.size() > best.size();
  if (grew) best = extended;

  // degree-ordered greedy restarts when extension stalls (bounded seed set
  // keeps the per-update cost quadratic)
  if (!grew || previous.empty()) {
    std::vector<int> degree(n, 0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && adjacency(i, j)) ++degree[i];
      }
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return degree[a] != degree[b] ? degree[a] > degree[b] : a < b;
    });
    const int seeds = std::min(n, 12);
    for (int s = 0; s < seeds; ++s) {
      std::vector<int> clique = {order[s]};
      for (int v : order) {
        if (v == order[s]) continue;
        if (adjacent_to_all(adjacency, v, clique)) clique.push_back(v);
      }
      if (clique.size() > best.size()) {
        std::sort(clique.begin(), clique.end());
        best = clique;
      }
    }
  }
  return best;
}

std::vector<LoopClosure> filter_inliers(const std::vector<LoopClosure>& closures,
                                        const OdometryProvider& odometry, const PcmConfig& cfg) {
  std::map<std::pair<RobotId, RobotId>, std::vector<LoopClosure>> pairs;
  for (const LoopClosure& lc : closures) pairs[{lc.from, lc.to}].push_back(lc);

  std::vector<LoopClosure> inliers;
  for (auto& [key, group] : pairs) {
    ConsistencyGraph graph;
    for (const LoopClosure& lc : group) insert_closure(graph, lc, odometry, cfg);
    std::vector<int> clique;
    if (graph.size() <= cfg.exact_cap) {
      clique = max_clique_exact(graph.adjacency);
    } else {
      clique = max_clique_incremental(graph.adjacency, {});
    }
    for (int idx : clique) inliers.push_back(graph.nodes[idx]);
  }
  std::sort(inliers.begin(), inliers.end(), [](const LoopClosure& a, const LoopClosure& b) {
    return std::tie(a.from, a.to, a.t) < std::tie(b.from, b.to, b.t);
  });
  return inliers;
}

std::string format_adjacency(const Adjacency& adjacency) {
  std::string out;
  const int n = static_cast<int>(adjacency.rows());
  out.reserve(static_cast<std::size_t>(n) * (2 * n + 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out += adjacency(i, j) ? '1' : '.';
      out += (j + 1 < n) ? ' ' : '\n';
    }
  }
  return out;
}

}  // namespace rslam
