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

#include "rslam/pose_graph.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rslam {

int PoseGraph::node_count() const {
  int n = 0;
  for (const auto& chain : poses) n += static_cast<int>(chain.size());
  return n;
}

Eigen::Vector3d edge_error(const Pose2d& z, const Pose2d& xi, const Pose2d& xj) {
  return between(z, between(xi, xj)).vector();
}

void edge_jacobians(const Pose2d& z, const Pose2d& xi, const Pose2d& xj, Eigen::Matrix3d& j_i,
                    Eigen::Matrix3d& j_j) {
  const double ci = std::cos(xi.theta), si = std::sin(xi.theta);
  const double cz = std::cos(z.theta), sz = std::sin(z.theta);
  Eigen::Matrix2d ri_t, rz_t, ri_dot_t;
  ri_t << ci, si, -si, ci;
  rz_t << cz, sz, -sz, cz;
  ri_dot_t << -si, ci, -ci, -si;  // d(R_i^T)/d(theta_i)
  const Eigen::Vector2d dt(xj.x - xi.x, xj.y - xi.y);

  j_i.setZero();
  j_i.topLeftCorner<2, 2>() = -rz_t * ri_t;
  j_i.topRightCorner<2, 1>() = rz_t * (ri_dot_t * dt);
  j_i(2, 2) = -1.0;

  j_j.setZero();
  j_j.topLeftCorner<2, 2>() = rz_t * ri_t;
  j_j(2, 2) = 1.0;
}

double graph_cost(const PoseGraph& graph) {
  double cost = 0.0;
  for (const GraphEdge& e : graph.edges) {
    const Eigen::Vector3d err = edge_error(e.rel, graph.pose(e.from), graph.pose(e.to));
    cost += err.dot(e.info * err);
  }
  return cost;
}

void dead_reckon(PoseGraph& graph) {
  std::vector<const GraphEdge*> chain;
  for (const GraphEdge& e : graph.edges) {
    if (!e.is_loop) chain.push_back(&e);
  }
  std::sort(chain.begin(), chain.end(), [](const GraphEdge* a, const GraphEdge* b) {
    return std::make_pair(a->from.robot, a->from.index) <
           std::make_pair(b->from.robot, b->from.index);
  });
  for (const GraphEdge* e : chain) {
    graph.pose(e->to) = compose(graph.pose(e->from), e->rel);
  }
}

void anchor_gauge(PoseGraph& graph) {
  const Pose2d t = inverse(graph.pose(graph.anchor));
  for (auto& chain : graph.poses) {
    for (Pose2d& p : chain) p = compose(t, p);
  }
}

namespace {

// Flat variable indexing over (robot, index) nodes.
struct Indexer {
  std::vector<int> offsets;  // per robot, in nodes

  explicit Indexer(const PoseGraph& g) {
    offsets.resize(g.poses.size() + 1, 0);
    for (std::size_t r = 0; r < g.poses.size(); ++r) {
      offsets[r + 1] = offsets[r] + static_cast<int>(g.poses[r].size());
    }
  }
  int node(NodeKey k) const { return offsets[k.robot] + k.index; }
  int total() const { return offsets.back(); }
};

void check_connected(const PoseGraph& graph, const Indexer& ix) {
  const int n = ix.total();
  if (n == 0) throw std::runtime_error("centralized_solve: empty graph");
  std::vector<std::vector<int>> neighbors(n);
  for (const GraphEdge& e : graph.edges) {
    neighbors[ix.node(e.from)].push_back(ix.node(e.to));
    neighbors[ix.node(e.to)].push_back(ix.node(e.from));
  }
  std::vector<bool> seen(n, false);
  std::deque<int> queue = {ix.node(graph.anchor)};
  seen[queue.front()] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : neighbors[v]) {
      if (!seen[u]) {
        seen[u] = true;
        queue.push_back(u);
      }
    }
  }
  int unreachable = static_cast<int>(std::count(seen.begin(), seen.end(), false));
  if (unreachable == 0) return;
  std::ostringstream msg;
  msg << "centralized_solve: " << unreachable << " node(s) unreachable from the anchor:";
  int listed = 0;
  for (int r = 0; r < graph.robot_count() && listed < 8; ++r) {
    for (std::size_t i = 0; i < graph.poses[r].size() && listed < 8; ++i) {
      if (!seen[ix.node({r, static_cast<int>(i)})]) {
        msg << " (" << r << "," << i << ")";
        ++listed;
      }
    }
  }
  if (listed < unreachable) msg << " ...";
  throw std::runtime_error(msg.str());
}

}  // namespace

SolveResult centralized_solve(PoseGraph& graph, const SolveOptions& opts) {
  const Indexer ix(graph);
  check_connected(graph, ix);

  SolveResult result;
  result.initial_cost = graph_cost(graph);
  result.final_cost = result.initial_cost;

  bool loop_free = std::none_of(graph.edges.begin(), graph.edges.end(),
                                [](const GraphEdge& e) { return e.is_loop; });
  if (loop_free) {
    // chain-only graphs are solved exactly by dead reckoning
    dead_reckon(graph);
    result.final_cost = graph_cost(graph);
    result.converged = true;
    return result;
  }

  const int anchor_node = ix.node(graph.anchor);
  const int n_vars = 3 * (ix.total() - 1);
  if (n_vars == 0) {
    result.converged = true;
    return result;
  }
  // variable index for a node, skipping the anchor
  const auto var = [&](int node) {
    return node < anchor_node ? 3 * node : 3 * (node - 1);
  };

  double lambda = 1e-6;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 36 + n_vars);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_vars);
    for (const GraphEdge& e : graph.edges) {
      const int ni = ix.node(e.from), nj = ix.node(e.to);
      const Eigen::Vector3d err = edge_error(e.rel, graph.pose(e.from), graph.pose(e.to));
      Eigen::Matrix3d j_i, j_j;
      edge_jacobians(e.rel, graph.pose(e.from), graph.pose(e.to), j_i, j_j);
      const bool free_i = ni != anchor_node, free_j = nj != anchor_node;
      const Eigen::Matrix3d wi = e.info * j_i, wj = e.info * j_j;
      if (free_i) {
        const Eigen::Matrix3d h = j_i.transpose() * wi;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) triplets.emplace_back(var(ni) + a, var(ni) + b, h(a, b));
        rhs.segment<3>(var(ni)) -= j_i.transpose() * (e.info * err);
      }
      if (free_j) {
        const Eigen::Matrix3d h = j_j.transpose() * wj;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) triplets.emplace_back(var(nj) + a, var(nj) + b, h(a, b));
        rhs.segment<3>(var(nj)) -= j_j.transpose() * (e.info * err);
      }
      if (free_i && free_j) {
        const Eigen::Matrix3d h = j_i.transpose() * wj;
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            triplets.emplace_back(var(ni) + a, var(nj) + b, h(a, b));
            triplets.emplace_back(var(nj) + b, var(ni) + a, h(a, b));
          }
        }
      }
    }

    bool accepted = false;
    Eigen::SparseMatrix<double> h_base(n_vars, n_vars);
    h_base.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd h_diag = h_base.diagonal().cwiseMax(1e-12);
    for (int attempt = 0; attempt < 10; ++attempt) {
      // Marquardt scaling keeps the damping meaningful at any stiffness
      std::vector<Eigen::Triplet<double>> damped = triplets;
      for (int i = 0; i < n_vars; ++i) damped.emplace_back(i, i, lambda * h_diag(i));
      Eigen::SparseMatrix<double> h(n_vars, n_vars);
      h.setFromTriplets(damped.begin(), damped.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd dx = solver.solve(rhs);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      if (dx.norm() < opts.step_tolerance) {
        result.converged = true;
        return result;
      }
      // trial update
      std::vector<std::vector<Pose2d>> backup = graph.poses;
      for (int r = 0; r < graph.robot_count(); ++r) {
        for (std::size_t i = 0; i < graph.poses[r].size(); ++i) {
          const int node = ix.node({r, static_cast<int>(i)});
          if (node == anchor_node) continue;
          Pose2d& p = graph.poses[r][i];
          p = Pose2d(p.x + dx(var(node) + 0), p.y + dx(var(node) + 1),
                     p.theta + dx(var(node) + 2));
        }
      }
      const double cost = graph_cost(graph);
      if (cost <= result.final_cost) {
        const double drop = result.final_cost - cost;
        result.final_cost = cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (drop < opts.relative_cost_tolerance * std::max(result.final_cost, 1.0)) {
          result.converged = true;
          return result;
        }
        break;
      }
      graph.poses = std::move(backup);
      lambda *= 10.0;
    }
    if (!accepted) {
      result.converged = true;  // no descent direction left at this scale
      return result;
    }
  }
  return result;
}

}  // namespace rslam
