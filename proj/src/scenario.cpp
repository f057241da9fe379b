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

#include "rslam/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rslam {

Pose2d Trajectory::at(double t) const {
  if (samples.empty()) throw std::runtime_error("Trajectory::at on empty trajectory");
  if (t <= samples.front().t) return samples.front().pose;
  if (t >= samples.back().t) return samples.back().pose;
  const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const TimedPose& s, double v) { return s.t < v; });
  const TimedPose& hi = *it;
  if (hi.t == t) return hi.pose;
  const TimedPose& lo = *std::prev(it);
  const double u = (t - lo.t) / (hi.t - lo.t);
  return Pose2d(lo.pose.x + u * (hi.pose.x - lo.pose.x), lo.pose.y + u * (hi.pose.y - lo.pose.y),
                lo.pose.theta + u * wrap_angle(hi.pose.theta - lo.pose.theta));
}

std::optional<TimedPose> Trajectory::nearest(double t, double tol) const {
  if (samples.empty()) return std::nullopt;
  const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const TimedPose& s, double v) { return s.t < v; });
  const TimedPose* best = nullptr;
  if (it != samples.end()) best = &*it;
  if (it != samples.begin()) {
    const TimedPose* lo = &*std::prev(it);
    if (best == nullptr || std::abs(lo->t - t) < std::abs(best->t - t)) best = lo;
  }
  if (best == nullptr || std::abs(best->t - t) > tol) return std::nullopt;
  return *best;
}

double Trajectory::path_length(double t0, double t1) const {
  double len = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t <= t0 || samples[i - 1].t >= t1) continue;
    len += (samples[i].pose.translation() - samples[i - 1].pose.translation()).norm();
  }
  return len;
}

GroundTruth generate_trajectories(const ScenarioConfig& cfg) {
  if (cfg.n_robots < 2) throw std::invalid_argument("generate_trajectories: need >= 2 robots");
  if (cfg.duration <= 0.0) throw std::invalid_argument("generate_trajectories: duration <= 0");
  if (cfg.arena_width <= 0.0 || cfg.arena_height <= 0.0) {
    throw std::invalid_argument("generate_trajectories: arena must be positive");
  }
  if (cfg.speed_limit < 0.0) throw std::invalid_argument("generate_trajectories: negative speed");
  if (cfg.sample_rate <= 0.0) throw std::invalid_argument("generate_trajectories: rate <= 0");

  std::mt19937_64 rng(cfg.seed);
  const double margin = 0.05 * std::min(cfg.arena_width, cfg.arena_height);
  std::uniform_real_distribution<double> ux(margin, cfg.arena_width - margin);
  std::uniform_real_distribution<double> uy(margin, cfg.arena_height - margin);
  std::uniform_real_distribution<double> uh(-EIGEN_PI, EIGEN_PI);

  const double dt = 1.0 / cfg.sample_rate;
  const int steps = static_cast<int>(std::llround(cfg.duration * cfg.sample_rate));

  GroundTruth truth;
  truth.robots.resize(cfg.n_robots);
  for (int r = 0; r < cfg.n_robots; ++r) {
    double px = ux(rng), py = uy(rng), heading = uh(rng);
    double wx = ux(rng), wy = uy(rng);
    Trajectory& traj = truth.robots[r];
    traj.samples.reserve(steps + 1);
    for (int k = 0; k <= steps; ++k) {
      traj.samples.push_back({k * dt, Pose2d(px, py, heading)});
      if (k == steps) break;
      // retarget when the waypoint is reached
      if (std::hypot(wx - px, wy - py) < 0.3) {
        wx = ux(rng);
        wy = uy(rng);
      }
      const double desired = std::atan2(wy - py, wx - px);
      const double dh = wrap_angle(desired - heading);
      const double max_dh = cfg.turn_rate * dt;
      heading = wrap_angle(heading + std::clamp(dh, -max_dh, max_dh));
      px += cfg.speed_limit * dt * std::cos(heading);
      py += cfg.speed_limit * dt * std::sin(heading);
      px = std::clamp(px, 0.0, cfg.arena_width);
      py = std::clamp(py, 0.0, cfg.arena_height);
    }
  }
  return truth;
}

std::vector<std::vector<OdometrySample>> synthesize_odometry(const GroundTruth& truth,
                                                             const NoiseConfig& cfg) {
  if (cfg.odom_rate <= 0.0) throw std::invalid_argument("synthesize_odometry: odom_rate <= 0");
  std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> trans_noise(0.0, 1.0);
  std::normal_distribution<double> rot_noise(0.0, 1.0);

  const double dt = 1.0 / cfg.odom_rate;
  std::vector<std::vector<OdometrySample>> out(truth.robots.size());
  for (std::size_t r = 0; r < truth.robots.size(); ++r) {
    const Trajectory& traj = truth.robots[r];
    if (traj.samples.empty()) continue;
    const double t_end = traj.samples.back().t;
    const int steps = static_cast<int>(std::floor(t_end / dt + 1e-9));
    std::vector<OdometrySample>& odom = out[r];
    odom.reserve(steps + 1);
    Pose2d pose;  // each robot's private frame starts at identity
    odom.push_back({0.0, pose});
    Pose2d prev_truth = traj.at(0.0);
    for (int k = 1; k <= steps; ++k) {
      const double t = k * dt;
      const Pose2d cur_truth = traj.at(t);
      Pose2d step = between(prev_truth, cur_truth);
      if (cfg.odom_trans_sigma > 0.0) {
        step.x += cfg.odom_trans_sigma * trans_noise(rng);
        step.y += cfg.odom_trans_sigma * trans_noise(rng);
      }
      if (cfg.odom_rot_sigma > 0.0) {
        step.theta = wrap_angle(step.theta + cfg.odom_rot_sigma * rot_noise(rng));
      }
      pose = compose(pose, step);
      odom.push_back({t, pose});
      prev_truth = cur_truth;
    }
  }
  return out;
}

std::vector<RangingMeasurement> synthesize_ranging(const GroundTruth& truth,
                                                   const NoiseConfig& cfg) {
  if (cfg.uwb_rate <= 0.0) throw std::invalid_argument("synthesize_ranging: uwb_rate <= 0");
  std::mt19937_64 rng(cfg.rng_seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::exponential_distribution<double> nlos(1.0);

  const int n = truth.robot_count();
  const double dt = 1.0 / cfg.uwb_rate;
  double t_end = 0.0;
  for (const auto& traj : truth.robots) {
    if (!traj.samples.empty()) t_end = std::max(t_end, traj.samples.back().t);
  }
  const int steps = static_cast<int>(std::floor(t_end / dt + 1e-9));

  std::vector<RangingMeasurement> out;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (!truth.robots[i].covers(t) || !truth.robots[j].covers(t)) continue;
        const double d =
            (truth.robots[i].at(t).translation() - truth.robots[j].at(t).translation()).norm();
        if (d > cfg.max_range) continue;
        double measured = d;
        if (cfg.uwb_sigma > 0.0) measured += cfg.uwb_sigma * noise(rng);
        if (cfg.nlos_probability > 0.0 && u01(rng) < cfg.nlos_probability) {
          measured += cfg.nlos_bias_scale * nlos(rng);
        }
        out.push_back({t, i, j, std::max(0.0, measured)});
      }
    }
  }
  return out;
}

int Dataset::robot_count() const {
  int n = static_cast<int>(odometry.size());
  for (const auto& m : ranging) n = std::max({n, m.from + 1, m.to + 1});
  if (truth) n = std::max(n, truth->robot_count());
  return n;
}

Dataset make_dataset(const GroundTruth& truth, const NoiseConfig& noise) {
  Dataset ds;
  ds.odometry = synthesize_odometry(truth, noise);
  ds.ranging = synthesize_ranging(truth, noise);
  ds.truth = truth;
  return ds;
}

namespace {

void print_fields(std::ostream& out, const char* tag, double t, int a, int b, const double* v,
                  int nv) {
  char buf[256];
  int len = std::snprintf(buf, sizeof(buf), "%s %.17g %d", tag, t, a);
  if (b >= 0) len += std::snprintf(buf + len, sizeof(buf) - len, " %d", b);
  for (int i = 0; i < nv; ++i) {
    len += std::snprintf(buf + len, sizeof(buf) - len, " %.17g", v[i]);
  }
  out << buf << '\n';
}

[[noreturn]] void fail(const std::string& name, int line, const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void write_dataset(const Dataset& ds, std::ostream& out) {
  out << "# ranging-slam dataset\n";
  out << "# ODOM t robot x y theta | UWB t from to dist | GT t robot x y theta\n";
  if (ds.truth) {
    for (int r = 0; r < ds.truth->robot_count(); ++r) {
      for (const TimedPose& s : ds.truth->robots[r].samples) {
        const double v[3] = {s.pose.x, s.pose.y, s.pose.theta};
        print_fields(out, "GT", s.t, r, -1, v, 3);
      }
    }
  }
  for (std::size_t r = 0; r < ds.odometry.size(); ++r) {
    for (const OdometrySample& s : ds.odometry[r]) {
      const double v[3] = {s.pose.x, s.pose.y, s.pose.theta};
      print_fields(out, "ODOM", s.t, static_cast<int>(r), -1, v, 3);
    }
  }
  for (const RangingMeasurement& m : ds.ranging) {
    print_fields(out, "UWB", m.t, m.from, m.to, &m.distance, 1);
  }
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  write_dataset(ds, out);
}

Dataset read_dataset(std::istream& in, const std::string& name) {
  Dataset ds;
  GroundTruth truth;
  bool has_truth = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "ODOM" || tag == "GT") {
      double t, x, y, theta;
      int robot;
      if (!(ls >> t >> robot >> x >> y >> theta)) fail(name, lineno, "malformed " + tag + " record");
      if (robot < 0) fail(name, lineno, "negative robot id");
      if (tag == "ODOM") {
        if (static_cast<int>(ds.odometry.size()) <= robot) ds.odometry.resize(robot + 1);
        auto& seq = ds.odometry[robot];
        if (!seq.empty() && t <= seq.back().t) fail(name, lineno, "non-monotone ODOM timestamp");
        seq.push_back({t, Pose2d(x, y, theta)});
      } else {
        has_truth = true;
        if (truth.robot_count() <= robot) truth.robots.resize(robot + 1);
        auto& seq = truth.robots[robot].samples;
        if (!seq.empty() && t <= seq.back().t) fail(name, lineno, "non-monotone GT timestamp");
        seq.push_back({t, Pose2d(x, y, theta)});
      }
    } else if (tag == "UWB") {
      double t, dist;
      int from, to;
      if (!(ls >> t >> from >> to >> dist)) fail(name, lineno, "malformed UWB record");
      if (from == to) fail(name, lineno, "UWB self-ranging");
      if (dist < 0.0) fail(name, lineno, "negative UWB distance");
      if (!ds.ranging.empty() && t < ds.ranging.back().t) {
        fail(name, lineno, "UWB timestamps must be non-decreasing");
      }
      ds.ranging.push_back({t, from, to, dist});
    } else {
      fail(name, lineno, "unknown record type '" + tag + "'");
    }
    std::string trailing;
    if (ls >> trailing) fail(name, lineno, "trailing fields");
  }
  if (has_truth) ds.truth = std::move(truth);
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  return read_dataset(in, path);
}

}  // namespace rslam
