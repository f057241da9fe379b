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

#include "rslam/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace rslam {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

SimulationResult run_simulation(const Dataset& dataset, const SimulationConfig& cfg) {
  const int n = dataset.robot_count();
  const double tick_dt = 1.0 / cfg.pipeline.sensors.uwb_rate;

  std::vector<RobotNode> nodes;
  nodes.reserve(n);
  for (int r = 0; r < n; ++r) nodes.emplace_back(r, n, cfg.pipeline);

  NetworkSim network(cfg.net, n);

  double t_end = 0.0;
  for (const auto& odom : dataset.odometry) {
    if (!odom.empty()) t_end = std::max(t_end, odom.back().t);
  }
  if (!dataset.ranging.empty()) t_end = std::max(t_end, dataset.ranging.back().t);

  // per-robot cursors into the sensor streams
  std::vector<std::size_t> odom_cursor(n, 0);
  std::size_t ranging_cursor = 0;

  const auto positions_at = [&](double t) {
    std::vector<Eigen::Vector2d> pos(n, Eigen::Vector2d::Zero());
    if (dataset.truth) {
      for (int r = 0; r < n && r < dataset.truth->robot_count(); ++r) {
        if (!dataset.truth->robots[r].samples.empty()) {
          pos[r] = dataset.truth->robots[r].at(t).translation();
        }
      }
    } else {
      // no truth available: treat robots that exchanged a recent ranging as
      // co-located, everyone else as unreachable
      for (int r = 0; r < n; ++r) pos[r] = Eigen::Vector2d(1e12 * (r + 1), 0.0);
    }
    return pos;
  };
  // ranging-recency link oracle used when no ground truth exists
  std::vector<std::vector<double>> last_contact(n, std::vector<double>(n, -1e30));

  std::vector<double> tick_ms;
  SimulationResult result;

  const int steps = static_cast<int>(std::llround(t_end / tick_dt));
  const double stream_end = steps * tick_dt;

  // inputs for the current step, prepared before nodes run
  std::vector<std::optional<OdometrySample>> odom_in(n);
  std::vector<std::vector<RangingMeasurement>> ranging_in(n);
  std::vector<std::vector<Message>> inbox(n);
  std::vector<std::vector<Message>> outbox(n);

  const auto prepare_step = [&](double now) {
    for (int r = 0; r < n; ++r) {
      odom_in[r].reset();
      ranging_in[r].clear();
      if (r < static_cast<int>(dataset.odometry.size())) {
        auto& cur = odom_cursor[r];
        const auto& stream = dataset.odometry[r];
        if (cur < stream.size() && stream[cur].t <= now + 1e-9) {
          odom_in[r] = stream[cur];
          ++cur;
        }
      }
    }
    while (ranging_cursor < dataset.ranging.size() &&
           dataset.ranging[ranging_cursor].t <= now + 1e-9) {
      const RangingMeasurement& m = dataset.ranging[ranging_cursor];
      if (m.from >= 0 && m.from < n) {
        ranging_in[m.from].push_back(m);
        last_contact[m.from][m.to] = last_contact[m.to][m.from] = m.t;
      }
      ++ranging_cursor;
    }
    std::vector<Eigen::Vector2d> pos = positions_at(now);
    if (!dataset.truth) {
      // fold the link oracle into positions: co-locate pairs in recent contact
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (now - last_contact[a][b] < 0.5) pos[b] = pos[a];
        }
      }
    }
    network.step(now, pos);
    for (int r = 0; r < n; ++r) inbox[r] = network.collect(r);
  };

  const auto run_nodes = [&](double now) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.parallel_nodes && n > 1) {
      std::vector<std::thread> threads;
      threads.reserve(n);
      for (int r = 0; r < n; ++r) {
        threads.emplace_back([&, r] {
          outbox[r] = nodes[r].tick(now, odom_in[r], ranging_in[r], std::move(inbox[r]));
        });
      }
      for (auto& th : threads) th.join();
    } else {
      for (int r = 0; r < n; ++r) {
        outbox[r] = nodes[r].tick(now, odom_in[r], ranging_in[r], std::move(inbox[r]));
      }
    }
    // sends merged in id order so network-side accounting is deterministic
    for (int r = 0; r < n; ++r) {
      for (Message& msg : outbox[r]) network.send(std::move(msg), now);
      outbox[r].clear();
    }
    tick_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  };

  const auto record_cost = [&] {
    std::vector<GraphFragment> frags;
    frags.reserve(n);
    for (const RobotNode& node : nodes) frags.push_back(node.fragment());
    PoseGraph graph = assemble_graph(frags);
    result.cost_trace.push_back(graph_cost(graph));
  };

  const double dpgo_period = 1.0 / std::max(cfg.pipeline.dpgo.update_rate, 1e-9);
  double next_cost_sample = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double now = k * tick_dt;
    prepare_step(now);
    run_nodes(now);
    if (now + 1e-9 >= next_cost_sample) {
      record_cost();
      next_cost_sample += dpgo_period;
    }
  }

  result.comm_live = network.account();

  // final convergence: optimization turns only, still strictly through the
  // network, robots frozen at their last positions
  int final_rounds = 0;
  if (cfg.final_convergence) {
    std::vector<Eigen::Vector2d> final_pos = positions_at(stream_end);
    if (!dataset.truth) {
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (stream_end - last_contact[a][b] < 0.5) final_pos[b] = final_pos[a];
        }
      }
    }
    double now = stream_end;
    int plateau = 0;
    double prev_cost = std::numeric_limits<double>::infinity();
    for (; final_rounds < cfg.pipeline.dpgo.max_rounds; ++final_rounds) {
      double max_step = 0.0;
      for (int r = 0; r < n; ++r) {
        now += tick_dt;
        network.step(now, final_pos);
        for (Message& msg : nodes[r].convergence_turn(now, network.collect(r))) {
          network.send(std::move(msg), now);
        }
        max_step = std::max(max_step, nodes[r].last_dpgo_step());
      }
      record_cost();
      const double cost = result.cost_trace.back();
      plateau = (prev_cost - cost <= 1e-9 * std::max(cost, 1.0)) ? plateau + 1 : 0;
      prev_cost = cost;
      if (max_step < cfg.pipeline.dpgo.step_tolerance || plateau >= 5) {
        ++final_rounds;
        break;
      }
    }
  }
  result.final_rounds = final_rounds;
  result.comm_total = network.account();

  // collect outputs
  std::vector<GraphFragment> frags;
  frags.reserve(n);
  for (const RobotNode& node : nodes) frags.push_back(node.fragment());
  anchor_gauge(frags);

  result.nodes.reserve(n);
  result.trajectories.resize(n);
  result.all_initialized = true;
  std::vector<double> est_ms, pcm_ms, dpgo_ms;
  for (int r = 0; r < n; ++r) {
    NodeSnapshot snap = nodes[r].snapshot();
    result.all_initialized = result.all_initialized && snap.initialized;
    result.nodes.push_back(snap);
    for (std::size_t i = 0; i < frags[r].poses.size(); ++i) {
      result.trajectories[r].push_back({frags[r].stamps[i], frags[r].poses[i]});
    }
    auto raw = nodes[r].owned_closures(false);
    auto inl = nodes[r].owned_closures(true);
    result.raw_closures.insert(result.raw_closures.end(), raw.begin(), raw.end());
    result.inlier_closures.insert(result.inlier_closures.end(), inl.begin(), inl.end());
    auto dumps = nodes[r].adjacency_dumps();
    result.adjacency_dumps.insert(result.adjacency_dumps.end(), dumps.begin(), dumps.end());
    const auto& t = nodes[r].timings();
    est_ms.insert(est_ms.end(), t.estimate_ms.begin(), t.estimate_ms.end());
    pcm_ms.insert(pcm_ms.end(), t.pcm_ms.begin(), t.pcm_ms.end());
    dpgo_ms.insert(dpgo_ms.end(), t.dpgo_ms.begin(), t.dpgo_ms.end());
  }
  result.timing.estimate_ms_median = median(est_ms);
  result.timing.pcm_ms_median = median(pcm_ms);
  result.timing.dpgo_ms_median = median(dpgo_ms);
  result.timing.tick_ms_median = median(tick_ms);
  result.timing.samples = static_cast<int>(tick_ms.size());
  return result;
}

}  // namespace rslam
