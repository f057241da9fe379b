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

#include "rslam/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <thread>

namespace rslam {

namespace fs = std::filesystem;

namespace {

constexpr double kRadToDeg = 180.0 / EIGEN_PI;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

Pose2d odom_interp(const std::vector<OdometrySample>& log, double t) {
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

}  // namespace

Dataset obtain_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path.empty()) return read_dataset(cfg.dataset_path);
  const GroundTruth truth = generate_trajectories(cfg.scenario);
  return make_dataset(truth, cfg.noise);
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  RunArtifacts run;
  run.dataset = obtain_dataset(cfg);
  SimulationConfig sim_cfg;
  sim_cfg.pipeline = cfg.pipeline;
  sim_cfg.net = cfg.net;
  sim_cfg.final_convergence = cfg.final_convergence;
  sim_cfg.parallel_nodes = cfg.parallel_nodes;
  run.sim = run_simulation(run.dataset, sim_cfg);
  if (run.dataset.truth) {
    run.metrics = compute_metrics(run.sim, *run.dataset.truth);
    run.have_metrics = true;
  }
  return run;
}

void write_trajectories(const std::vector<std::vector<TimedPose>>& trajectories,
                        const std::string& path) {
  auto out = open_out(path);
  out << "# EST t robot x y theta\n";
  char line[256];
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    for (const TimedPose& s : trajectories[r]) {
      std::snprintf(line, sizeof(line), "EST %.17g %zu %.17g %.17g %.17g\n", s.t, r, s.pose.x,
                    s.pose.y, s.pose.theta);
      out << line;
    }
  }
}

std::vector<std::vector<TimedPose>> read_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<TimedPose>> out;
  std::string line, tag;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double t, x, y, theta;
    int robot;
    if (!(ls >> tag >> t >> robot >> x >> y >> theta) || tag != "EST") {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed EST line");
    }
    if (static_cast<int>(out.size()) <= robot) out.resize(robot + 1);
    out[robot].push_back({t, Pose2d(x, y, theta)});
  }
  return out;
}

void write_closures(const std::vector<LoopClosure>& closures, const std::string& path) {
  auto out = open_out(path);
  out << "# LC t from to x y theta residual window\n";
  char line[320];
  for (const LoopClosure& c : closures) {
    std::snprintf(line, sizeof(line), "LC %.17g %d %d %.17g %.17g %.17g %.17g %d\n", c.t, c.from,
                  c.to, c.relative_pose.x, c.relative_pose.y, c.relative_pose.theta, c.residual,
                  c.window_size);
    out << line;
  }
}

std::vector<LoopClosure> read_closures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<LoopClosure> out;
  std::string line, tag;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    LoopClosure c;
    double x, y, theta;
    if (!(ls >> tag >> c.t >> c.from >> c.to >> x >> y >> theta >> c.residual >> c.window_size) ||
        tag != "LC") {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed LC line");
    }
    c.relative_pose = Pose2d(x, y, theta);
    out.push_back(c);
  }
  return out;
}

void write_run_outputs(const RunArtifacts& run, const ExperimentConfig& cfg,
                       const std::string& dir) {
  fs::create_directories(dir);
  write_trajectories(run.sim.trajectories, dir + "/estimate.txt");
  write_closures(run.sim.raw_closures, dir + "/closures_raw.txt");
  write_closures(run.sim.inlier_closures, dir + "/closures_inlier.txt");
  {
    auto out = open_out(dir + "/cost_trace.csv");
    out << "round,cost\n";
    char line[64];
    for (std::size_t i = 0; i < run.sim.cost_trace.size(); ++i) {
      std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, run.sim.cost_trace[i]);
      out << line;
    }
  }
  {
    auto out = open_out(dir + "/comm_report.txt");
    out << "live phase (sensor stream)\n";
    for (int i = 0; i < kMsgKindCount; ++i) {
      out << "  " << msg_kind_name(static_cast<MsgKind>(i)) << ": "
          << run.sim.comm_live.sent[i].messages << " msgs, " << run.sim.comm_live.sent[i].bytes
          << " bytes\n";
    }
    out << "total including final convergence\n";
    for (int i = 0; i < kMsgKindCount; ++i) {
      out << "  " << msg_kind_name(static_cast<MsgKind>(i)) << ": "
          << run.sim.comm_total.sent[i].messages << " msgs, " << run.sim.comm_total.sent[i].bytes
          << " bytes\n";
    }
    out << "grand total bytes: " << run.sim.comm_total.total_sent_bytes() << "\n";
  }
  {
    auto out = open_out(dir + "/comm_report.csv");
    out << "phase,kind,messages,bytes\n";
    for (int i = 0; i < kMsgKindCount; ++i) {
      out << "live," << msg_kind_name(static_cast<MsgKind>(i)) << ','
          << run.sim.comm_live.sent[i].messages << ',' << run.sim.comm_live.sent[i].bytes << '\n';
    }
    for (int i = 0; i < kMsgKindCount; ++i) {
      out << "total," << msg_kind_name(static_cast<MsgKind>(i)) << ','
          << run.sim.comm_total.sent[i].messages << ',' << run.sim.comm_total.sent[i].bytes
          << '\n';
    }
  }
  if (run.have_metrics) {
    open_out(dir + "/metrics.txt") << format_metrics(run.metrics);
    open_out(dir + "/metrics.csv") << format_metrics_csv(run.metrics);
  }
  for (const auto& [pair, grid] : run.sim.adjacency_dumps) {
    open_out(dir + "/pcm_adjacency_" + std::to_string(pair.first) + "_" +
             std::to_string(pair.second) + ".txt")
        << grid;
  }
  {
    auto out = open_out(dir + "/timing.csv");
    out << "op,median_ms\n";
    out << "estimate," << run.sim.timing.estimate_ms_median << "\n";
    out << "pcm," << run.sim.timing.pcm_ms_median << "\n";
    out << "dpgo," << run.sim.timing.dpgo_ms_median << "\n";
    out << "tick," << run.sim.timing.tick_ms_median << "\n";
  }
  open_out(dir + "/config.txt") << format_config(cfg);
}

std::vector<LabeledWindow> collect_windows(const Dataset& dataset, RobotId from, RobotId to,
                                           int tau, double period, int stride) {
  if (!dataset.truth) throw std::invalid_argument("collect_windows: dataset has no ground truth");
  if (stride < 1) throw std::invalid_argument("collect_windows: stride < 1");
  if (from >= static_cast<int>(dataset.odometry.size()) ||
      to >= static_cast<int>(dataset.odometry.size())) {
    return {};
  }
  const auto& odom_a = dataset.odometry[from];
  const auto& odom_b = dataset.odometry[to];
  if (odom_a.empty() || odom_b.empty()) return {};

  std::vector<const RangingMeasurement*> pair_rangings;
  for (const RangingMeasurement& m : dataset.ranging) {
    if (m.from == from && m.to == to) pair_rangings.push_back(&m);
  }

  const std::size_t span = static_cast<std::size_t>(tau - 1) * stride;
  std::vector<LabeledWindow> out;
  double next_time = 0.0;
  for (std::size_t end = 0; end < pair_rangings.size(); ++end) {
    const double t_end = pair_rangings[end]->t;
    if (t_end < next_time) continue;
    if (end < span) continue;
    const std::size_t begin = end - span;
    const double t_begin = pair_rangings[begin]->t;
    if (odom_a.front().t > t_begin || odom_b.front().t > t_begin) continue;
    if (odom_a.back().t < t_end || odom_b.back().t < t_end) continue;

    const Pose2d own_end = odom_interp(odom_a, t_end);
    const Pose2d peer_end = odom_interp(odom_b, t_end);
    LabeledWindow lw;
    lw.window.entries.reserve(tau);
    for (std::size_t i = begin; i <= end; i += stride) {
      const double t = pair_rangings[i]->t;
      WindowEntry e;
      e.t = t;
      e.rel_alpha = (i == end) ? Pose2d() : between(own_end, odom_interp(odom_a, t));
      e.rel_beta = (i == end) ? Pose2d() : between(peer_end, odom_interp(odom_b, t));
      e.range = pair_rangings[i]->distance;
      lw.window.entries.push_back(e);
    }
    lw.truth_rel =
        between(dataset.truth->robots[from].at(t_end), dataset.truth->robots[to].at(t_end));
    out.push_back(std::move(lw));
    next_time = t_end + period;
  }
  return out;
}

void write_residual_grid_csv(const ResidualGrid& grid, const std::string& path) {
  auto out = open_out(path);
  out << "phi,theta,mean_residual\n";
  char line[128];
  for (int i_phi = -grid.steps; i_phi <= grid.steps; ++i_phi) {
    for (int i_theta = -grid.steps; i_theta <= grid.steps; ++i_theta) {
      std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", grid.delta * i_phi,
                    grid.delta * i_theta, grid.value(i_phi, i_theta));
      out << line;
    }
  }
}

namespace {

struct MethodErrors {
  double trans = 0.0;
  double rot = 0.0;
  double ms = 0.0;
};

MethodErrors eval_windows(const std::vector<LabeledWindow>& windows, const SearchConfig& search,
                          const char* method) {
  std::vector<double> trans, rot;
  const auto t0 = std::chrono::steady_clock::now();
  for (const LabeledWindow& lw : windows) {
    Pose2d est;
    if (std::string_view(method) == "nls") {
      est = refine(Pose2d(), lw.window).pose;
    } else if (std::string_view(method) == "coarse") {
      est = coarse_search(lw.window, search).pose;
    } else {
      est = refine(coarse_search(lw.window, search).pose, lw.window).pose;
    }
    const Pose2d err = between(lw.truth_rel, est);
    trans.push_back(err.translation().norm());
    rot.push_back(std::abs(err.theta) * kRadToDeg);
  }
  MethodErrors out;
  out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
               .count() /
           std::max<std::size_t>(1, windows.size());
  out.trans = error_stats(trans).mean;
  out.rot = error_stats(rot).mean;
  return out;
}

ExperimentConfig seeded(const ExperimentConfig& cfg, std::uint64_t seed) {
  ExperimentConfig out = cfg;
  out.scenario.seed = seed;
  finalize_config(out);
  return out;
}

void sweep_tab1(const ExperimentConfig& cfg, const std::string& dir) {
  const int cells = static_cast<int>(cfg.tau_list.size() * cfg.seeds.size());
  std::vector<std::string> rows(cells);
  parallel_for(cells, cfg.sweep_threads, [&](int cell) {
    const int ti = cell / static_cast<int>(cfg.seeds.size());
    const int si = cell % static_cast<int>(cfg.seeds.size());
    const int tau = cfg.tau_list[ti];
    const ExperimentConfig local = seeded(cfg, cfg.seeds[si]);
    const Dataset ds = obtain_dataset(local);
    const auto windows = collect_windows(ds, 0, 1, tau, local.pipeline.estimate_period,
                                        local.pipeline.effective_window_stride());
    const MethodErrors nls = eval_windows(windows, local.pipeline.estimation.search, "nls");
    const MethodErrors coarse = eval_windows(windows, local.pipeline.estimation.search, "coarse");
    const MethodErrors comb = eval_windows(windows, local.pipeline.estimation.search, "combined");
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%d,%llu,%zu,%.6g,%.6g,%.4g,%.6g,%.6g,%.4g,%.6g,%.6g,%.4g\n", tau,
                  static_cast<unsigned long long>(cfg.seeds[si]), windows.size(), nls.trans,
                  nls.rot, nls.ms, coarse.trans, coarse.rot, coarse.ms, comb.trans, comb.rot,
                  comb.ms);
    rows[cell] = line;
  });
  auto out = open_out(dir + "/sweep_tab1.csv");
  out << "tau,seed,windows,nls_trans_m,nls_rot_deg,nls_ms,coarse_trans_m,coarse_rot_deg,"
         "coarse_ms,combined_trans_m,combined_rot_deg,combined_ms\n";
  for (const std::string& r : rows) out << r;
}

void sweep_tab2(const ExperimentConfig& cfg, const std::string& dir) {
  const int cells = static_cast<int>(cfg.epsilon_list.size() * cfg.seeds.size());
  std::vector<std::string> rows(cells);
  parallel_for(cells, cfg.sweep_threads, [&](int cell) {
    const int ei = cell / static_cast<int>(cfg.seeds.size());
    const int si = cell % static_cast<int>(cfg.seeds.size());
    ExperimentConfig local = seeded(cfg, cfg.seeds[si]);
    local.pipeline.pcm.epsilon = cfg.epsilon_list[ei];
    const RunArtifacts run = run_experiment(local);
    char line[512];
    std::snprintf(line, sizeof(line), "%.12g,%llu,%d,%d,%.6g,%.6g,%.6g,%.6g\n",
                  cfg.epsilon_list[ei], static_cast<unsigned long long>(cfg.seeds[si]),
                  run.metrics.inlier_count, run.metrics.raw_count,
                  run.metrics.post_pcm.translation_m.mean, run.metrics.post_pcm.rotation_deg.mean,
                  run.metrics.post_dpgo.translation_m.mean,
                  run.metrics.post_dpgo.rotation_deg.mean);
    rows[cell] = line;
  });
  auto out = open_out(dir + "/sweep_tab2.csv");
  out << "epsilon,seed,inliers,raw,pcm_trans_m,pcm_rot_deg,dpgo_trans_m,dpgo_rot_deg\n";
  for (const std::string& r : rows) out << r;
}

// deterministic straight-line dataset builder for the landscape cases
Dataset line_dataset(const Eigen::Vector2d& start_a, double heading_a,
                     const Eigen::Vector2d& start_b, double heading_b, double speed,
                     double duration, const NoiseConfig& noise, bool curve_b) {
  GroundTruth truth;
  truth.robots.resize(2);
  const double dt = 1.0 / noise.uwb_rate;
  const int steps = static_cast<int>(std::llround(duration / dt));
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    truth.robots[0].samples.push_back(
        {t, Pose2d(start_a.x() + speed * t * std::cos(heading_a),
                   start_a.y() + speed * t * std::sin(heading_a), heading_a)});
    double hb = heading_b;
    Eigen::Vector2d pb = start_b + speed * t * Eigen::Vector2d(std::cos(heading_b),
                                                               std::sin(heading_b));
    if (curve_b) {
      // constant-turn arc instead of a straight line
      const double omega = 0.4;
      hb = wrap_angle(heading_b + omega * t);
      const double radius = speed / omega;
      pb = start_b + radius * Eigen::Vector2d(std::sin(hb) - std::sin(heading_b),
                                              std::cos(heading_b) - std::cos(hb));
    }
    truth.robots[1].samples.push_back({t, Pose2d(pb.x(), pb.y(), hb)});
  }
  return make_dataset(truth, noise);
}

void sweep_fig4(const ExperimentConfig& cfg, const std::string& dir) {
  NoiseConfig noise = cfg.noise;
  noise.uwb_sigma = 0.0;
  noise.odom_trans_sigma = 0.0;
  noise.odom_rot_sigma = 0.0;
  const int stride = cfg.pipeline.effective_window_stride();
  const double duration = (cfg.pipeline.tau * stride + 1) / noise.uwb_rate +
                          2.0 / std::max(noise.odom_rate, 1e-9);

  // case 1: robot 1 curves, breaking the mirror symmetry
  const Dataset case1 = line_dataset({0.0, 0.0}, 0.0, {2.0, 2.0}, EIGEN_PI / 3.0, 0.4, duration,
                                     noise, true);
  // case 2: parallel straight lines, near-collinear observation geometry
  const Dataset case2 = line_dataset({0.0, 0.0}, 0.0, {0.0, 3.0}, 0.0, 0.4, duration, noise,
                                     false);
  int case_index = 0;
  for (const Dataset* ds : {&case1, &case2}) {
    ++case_index;
    const auto windows = collect_windows(*ds, 0, 1, cfg.pipeline.tau, 1e9, stride);
    if (windows.empty()) throw std::runtime_error("fig4: no window could be built");
    const ResidualGrid grid = residual_grid(windows.front().window,
                                            cfg.pipeline.estimation.search);
    write_residual_grid_csv(grid, dir + "/residual_grid_case" + std::to_string(case_index) +
                                      ".csv");
    const auto minima = grid_local_minima(grid);
    auto out = open_out(dir + "/residual_minima_case" + std::to_string(case_index) + ".csv");
    out << "phi,theta,mean_residual\n";
    char line[128];
    for (const GridMinimum& m : minima) {
      std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", grid.delta * m.i_phi,
                    grid.delta * m.i_theta, m.value);
      out << line;
    }
  }
}

void sweep_fig6(const ExperimentConfig& cfg, const std::string& dir) {
  const int cells = static_cast<int>(cfg.delta_list.size() * cfg.seeds.size());
  std::vector<std::string> rows(cells);
  parallel_for(cells, cfg.sweep_threads, [&](int cell) {
    const int di = cell / static_cast<int>(cfg.seeds.size());
    const int si = cell % static_cast<int>(cfg.seeds.size());
    const ExperimentConfig local = seeded(cfg, cfg.seeds[si]);
    SearchConfig search = local.pipeline.estimation.search;
    search.delta = cfg.delta_list[di];
    const Dataset ds = obtain_dataset(local);
    const auto windows =
        collect_windows(ds, 0, 1, local.pipeline.tau, local.pipeline.estimate_period,
                        local.pipeline.effective_window_stride());
    const MethodErrors coarse = eval_windows(windows, search, "coarse");
    const MethodErrors comb = eval_windows(windows, search, "combined");
    char line[400];
    std::snprintf(line, sizeof(line), "%.12g,%llu,%zu,%.6g,%.6g,%.4g,%.6g,%.6g,%.4g\n",
                  cfg.delta_list[di], static_cast<unsigned long long>(cfg.seeds[si]),
                  windows.size(), coarse.trans, coarse.rot, coarse.ms, comb.trans, comb.rot,
                  comb.ms);
    rows[cell] = line;
  });
  auto out = open_out(dir + "/sweep_fig6.csv");
  out << "delta,seed,windows,coarse_trans_m,coarse_rot_deg,coarse_ms,combined_trans_m,"
         "combined_rot_deg,combined_ms\n";
  for (const std::string& r : rows) out << r;
}

void sweep_fig7(const ExperimentConfig& cfg, const std::string& dir) {
  const int cells = static_cast<int>(cfg.range_fractions.size() * cfg.seeds.size());
  std::vector<std::string> rows(cells);
  parallel_for(cells, cfg.sweep_threads, [&](int cell) {
    const int fi = cell / static_cast<int>(cfg.seeds.size());
    const int si = cell % static_cast<int>(cfg.seeds.size());
    ExperimentConfig local = seeded(cfg, cfg.seeds[si]);
    const GroundTruth truth = generate_trajectories(local.scenario);
    // fraction of the largest inter-robot distance actually reached
    double max_d = 0.0;
    const Trajectory& a = truth.robots[0];
    const Trajectory& b = truth.robots[1];
    for (const TimedPose& s : a.samples) {
      max_d = std::max(max_d,
                       (s.pose.translation() - b.at(s.t).translation()).norm());
    }
    local.noise.max_range = cfg.range_fractions[fi] * max_d;
    finalize_config(local);
    const Dataset ds = make_dataset(truth, local.noise);
    const auto windows =
        collect_windows(ds, 0, 1, local.pipeline.tau, local.pipeline.estimate_period,
                        local.pipeline.effective_window_stride());
    const MethodErrors comb = eval_windows(windows, local.pipeline.estimation.search, "combined");
    char line[320];
    std::snprintf(line, sizeof(line), "%.12g,%llu,%zu,%.6g,%.6g\n", cfg.range_fractions[fi],
                  static_cast<unsigned long long>(cfg.seeds[si]), windows.size(), comb.trans,
                  comb.rot);
    rows[cell] = line;
  });
  auto out = open_out(dir + "/sweep_fig7.csv");
  out << "range_fraction,seed,windows,combined_trans_m,combined_rot_deg\n";
  for (const std::string& r : rows) out << r;
}

void sweep_fig8(const ExperimentConfig& cfg, const std::string& dir) {
  // scale factors apply to a base odometry noise (the configured one when
  // nonzero, a representative default otherwise)
  const double base_t = cfg.noise.odom_trans_sigma > 0.0 ? cfg.noise.odom_trans_sigma : 0.005;
  const double base_r = cfg.noise.odom_rot_sigma > 0.0 ? cfg.noise.odom_rot_sigma : 0.002;
  const int cells = static_cast<int>(cfg.odom_noise_scales.size() * cfg.seeds.size());
  std::vector<std::string> rows(cells);
  parallel_for(cells, cfg.sweep_threads, [&](int cell) {
    const int ni = cell / static_cast<int>(cfg.seeds.size());
    const int si = cell % static_cast<int>(cfg.seeds.size());
    ExperimentConfig local = seeded(cfg, cfg.seeds[si]);
    local.noise.odom_trans_sigma = base_t * cfg.odom_noise_scales[ni];
    local.noise.odom_rot_sigma = base_r * cfg.odom_noise_scales[ni];
    finalize_config(local);
    const Dataset ds = obtain_dataset(local);
    const auto windows =
        collect_windows(ds, 0, 1, local.pipeline.tau, local.pipeline.estimate_period,
                        local.pipeline.effective_window_stride());
    const MethodErrors comb = eval_windows(windows, local.pipeline.estimation.search, "combined");
    char line[320];
    std::snprintf(line, sizeof(line), "%.12g,%llu,%zu,%.6g,%.6g\n", cfg.odom_noise_scales[ni],
                  static_cast<unsigned long long>(cfg.seeds[si]), windows.size(), comb.trans,
                  comb.rot);
    rows[cell] = line;
  });
  auto out = open_out(dir + "/sweep_fig8.csv");
  out << "odom_noise_scale,seed,windows,combined_trans_m,combined_rot_deg\n";
  for (const std::string& r : rows) out << r;
}

void sweep_tab4(const ExperimentConfig& cfg, const std::string& dir) {
  auto out = open_out(dir + "/sweep_tab4.csv");
  out << "dpgo_rate_hz,estimate_ms,pcm_ms,dpgo_ms,tick_ms,odom_bytes,closure_bytes,"
         "separator_bytes,verdict_bytes,total_bytes\n";
  for (double rate : {10.0, 1.0}) {
    ExperimentConfig local = cfg;
    local.pipeline.dpgo.update_rate = rate;
    finalize_config(local);
    const RunArtifacts run = run_experiment(local);
    const CommAccount& live = run.sim.comm_live;
    char line[512];
    std::snprintf(line, sizeof(line), "%.12g,%.4g,%.4g,%.4g,%.4g,%lld,%lld,%lld,%lld,%lld\n",
                  rate, run.sim.timing.estimate_ms_median, run.sim.timing.pcm_ms_median,
                  run.sim.timing.dpgo_ms_median, run.sim.timing.tick_ms_median,
                  static_cast<long long>(live.of(MsgKind::kOdomWindow).bytes),
                  static_cast<long long>(live.of(MsgKind::kLoopClosure).bytes),
                  static_cast<long long>(live.of(MsgKind::kSeparatorPoses).bytes),
                  static_cast<long long>(live.of(MsgKind::kPcmVerdict).bytes),
                  static_cast<long long>(live.total_sent_bytes()));
    out << line;
  }
}

// column means of a numeric CSV grouped by its first column
void aggregate_csv(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> names;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) names.push_back(col);
  }
  std::map<double, std::pair<int, std::vector<double>>> groups;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    auto& [count, sums] = groups[row[0]];
    if (sums.empty()) sums.resize(row.size(), 0.0);
    for (std::size_t i = 0; i < row.size(); ++i) sums[i] += row[i];
    ++count;
  }
  auto out = open_out(out_path);
  out << names[0];
  for (std::size_t i = 1; i < names.size(); ++i) out << ",mean_" << names[i];
  out << "\n";
  char buf[64];
  for (const auto& [key, group] : groups) {
    std::snprintf(buf, sizeof(buf), "%.12g", key);
    out << buf;
    for (std::size_t i = 1; i < group.second.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.12g", group.second[i] / group.first);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace

void run_sweep_preset(const ExperimentConfig& cfg, const std::string& preset,
                      const std::string& dir) {
  if (cfg.seeds.empty()) throw std::runtime_error("sweep: seeds list is empty");
  if ((preset == "tab1" && cfg.tau_list.empty()) ||
      (preset == "tab2" && cfg.epsilon_list.empty()) ||
      (preset == "fig6" && cfg.delta_list.empty()) ||
      (preset == "fig7" && cfg.range_fractions.empty()) ||
      (preset == "fig8" && cfg.odom_noise_scales.empty())) {
    throw std::runtime_error("sweep: the " + preset + " grid list is empty");
  }
  fs::create_directories(dir);
  if (preset == "tab1") {
    sweep_tab1(cfg, dir);
  } else if (preset == "tab2") {
    sweep_tab2(cfg, dir);
  } else if (preset == "fig4") {
    sweep_fig4(cfg, dir);
  } else if (preset == "fig6") {
    sweep_fig6(cfg, dir);
  } else if (preset == "fig7") {
    sweep_fig7(cfg, dir);
  } else if (preset == "fig8") {
    sweep_fig8(cfg, dir);
  } else if (preset == "tab4") {
    sweep_tab4(cfg, dir);
  } else {
    throw std::runtime_error("unknown sweep preset '" + preset +
                             "' (expected tab1, tab2, fig4, fig6, fig7, fig8 or tab4)");
  }
}

std::vector<std::string> emit_plot_data(const std::string& dir) {
  std::vector<std::string> written;
  struct Family {
    const char* input;
    const char* output;
  };
  const Family families[] = {
      {"sweep_tab1.csv", "plot_tab1.csv"}, {"sweep_tab2.csv", "plot_tab2.csv"},
      {"sweep_fig6.csv", "plot_fig6.csv"}, {"sweep_fig7.csv", "plot_fig7.csv"},
      {"sweep_fig8.csv", "plot_fig8.csv"}, {"sweep_tab4.csv", "plot_tab4.csv"},
  };
  for (const Family& f : families) {
    const std::string in_path = dir + "/" + f.input;
    if (!fs::exists(in_path)) continue;
    aggregate_csv(in_path, dir + "/" + f.output);
    written.push_back(f.output);
  }
  for (int c = 1; c <= 2; ++c) {
    const std::string in_path = dir + "/residual_grid_case" + std::to_string(c) + ".csv";
    if (!fs::exists(in_path)) continue;
    const std::string out_path = dir + "/plot_fig4_case" + std::to_string(c) + ".csv";
    fs::copy_file(in_path, out_path, fs::copy_options::overwrite_existing);
    written.push_back("plot_fig4_case" + std::to_string(c) + ".csv");
  }
  if (written.empty()) {
    std::string msg = "emit_plot_data: no usable inputs in " + dir + "; looked for:";
    for (const Family& f : families) msg += std::string(" ") + f.input;
    msg += " residual_grid_case1.csv residual_grid_case2.csv";
    throw std::runtime_error(msg);
  }
  return written;
}

}  // namespace rslam
