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

#include "rslam/metrics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rslam {

namespace {
constexpr double kRadToDeg = 180.0 / EIGEN_PI;
}

ErrorStats error_stats(const std::vector<double>& values) {
  ErrorStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
    s.max = std::max(s.max, v);
  }
  s.mean = sum / s.count;
  s.mse = sq / s.count;
  s.stddev = std::sqrt(std::max(0.0, s.mse - s.mean * s.mean));
  return s;
}

Pose2d align_se2(const std::vector<Eigen::Vector2d>& source,
                 const std::vector<Eigen::Vector2d>& target) {
  if (source.size() != target.size() || source.size() < 2) {
    throw std::invalid_argument("align_se2: need >= 2 matched point pairs");
  }
  Eigen::Vector2d cs = Eigen::Vector2d::Zero(), ct = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= static_cast<double>(source.size());
  ct /= static_cast<double>(target.size());
  double dot = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector2d p = source[i] - cs;
    const Eigen::Vector2d q = target[i] - ct;
    dot += p.dot(q);
    cross += p.x() * q.y() - p.y() * q.x();
  }
  const double theta = std::atan2(cross, dot);
  const Eigen::Rotation2Dd rot(theta);
  const Eigen::Vector2d t = ct - rot * cs;
  return Pose2d(t.x(), t.y(), theta);
}

std::vector<std::pair<double, double>> closure_errors(const std::vector<LoopClosure>& closures,
                                                      const GroundTruth& truth) {
  std::vector<std::pair<double, double>> out;
  out.reserve(closures.size());
  for (const LoopClosure& lc : closures) {
    if (lc.from >= truth.robot_count() || lc.to >= truth.robot_count()) continue;
    const Trajectory& ta = truth.robots[lc.from];
    const Trajectory& tb = truth.robots[lc.to];
    if (!ta.covers(lc.t) || !tb.covers(lc.t)) continue;
    const Pose2d expected = between(ta.at(lc.t), tb.at(lc.t));
    const Pose2d err = between(expected, lc.relative_pose);
    out.emplace_back(err.translation().norm(), std::abs(err.theta) * kRadToDeg);
  }
  return out;
}

namespace {

StageErrors stage_from_pairs(const std::vector<std::pair<double, double>>& errors) {
  std::vector<double> trans, rot;
  trans.reserve(errors.size());
  rot.reserve(errors.size());
  for (const auto& [t, r] : errors) {
    trans.push_back(t);
    rot.push_back(r);
  }
  return {error_stats(trans), error_stats(rot)};
}

// relative-pose errors recomputed from the optimized trajectories at the
// given closures' timestamps
StageErrors stage_from_trajectories(const std::vector<LoopClosure>& closures,
                                    const std::vector<std::vector<TimedPose>>& est,
                                    const GroundTruth& truth) {
  std::vector<std::pair<double, double>> errors;
  for (const LoopClosure& lc : closures) {
    if (lc.from >= static_cast<int>(est.size()) || lc.to >= static_cast<int>(est.size())) continue;
    Trajectory ea{est[lc.from]}, eb{est[lc.to]};
    if (!ea.covers(lc.t) || !eb.covers(lc.t)) continue;
    if (!truth.robots[lc.from].covers(lc.t) || !truth.robots[lc.to].covers(lc.t)) continue;
    const Pose2d measured = between(ea.at(lc.t), eb.at(lc.t));
    const Pose2d expected = between(truth.robots[lc.from].at(lc.t), truth.robots[lc.to].at(lc.t));
    const Pose2d err = between(expected, measured);
    errors.emplace_back(err.translation().norm(), std::abs(err.theta) * kRadToDeg);
  }
  return stage_from_pairs(errors);
}

}  // namespace

MetricsReport compute_metrics(const SimulationResult& sim, const GroundTruth& truth) {
  MetricsReport report;
  report.raw = stage_from_pairs(closure_errors(sim.raw_closures, truth));
  report.post_pcm = stage_from_pairs(closure_errors(sim.inlier_closures, truth));
  report.post_dpgo = stage_from_trajectories(sim.inlier_closures, sim.trajectories, truth);
  report.raw_count = static_cast<int>(sim.raw_closures.size());
  report.inlier_count = static_cast<int>(sim.inlier_closures.size());
  report.timing = sim.timing;
  report.comm_bytes = sim.comm_total.total_sent_bytes();

  // absolute trajectory errors after one joint rigid alignment
  std::vector<Eigen::Vector2d> est_pts, truth_pts;
  std::vector<double> est_theta, truth_theta;
  for (int r = 0; r < static_cast<int>(sim.trajectories.size()) && r < truth.robot_count(); ++r) {
    for (const TimedPose& s : sim.trajectories[r]) {
      if (!truth.robots[r].covers(s.t)) continue;
      const Pose2d gt = truth.robots[r].at(s.t);
      est_pts.push_back(s.pose.translation());
      truth_pts.push_back(gt.translation());
      est_theta.push_back(s.pose.theta);
      truth_theta.push_back(gt.theta);
    }
  }
  if (est_pts.size() < 2) {
    throw std::runtime_error("compute_metrics: no overlapping timestamps between estimate and truth");
  }
  const Pose2d tf = align_se2(est_pts, truth_pts);
  const Eigen::Rotation2Dd rot(tf.theta);
  std::vector<double> trans_err, rot_err;
  trans_err.reserve(est_pts.size());
  rot_err.reserve(est_pts.size());
  for (std::size_t i = 0; i < est_pts.size(); ++i) {
    const Eigen::Vector2d mapped = rot * est_pts[i] + tf.translation();
    trans_err.push_back((mapped - truth_pts[i]).norm());
    rot_err.push_back(std::abs(wrap_angle(est_theta[i] + tf.theta - truth_theta[i])) * kRadToDeg);
  }
  report.trajectory = {error_stats(trans_err), error_stats(rot_err)};
  return report;
}

namespace {

void print_stage(std::ostringstream& out, const char* name, const StageErrors& s) {
  char line[256];
  std::snprintf(line, sizeof(line),
                "%-12s trans %8.4f +/- %-8.4f m (mse %8.5f)  rot %8.4f +/- %-8.4f deg (mse %9.5f)"
                "  n=%d\n",
                name, s.translation_m.mean, s.translation_m.stddev, s.translation_m.mse,
                s.rotation_deg.mean, s.rotation_deg.stddev, s.rotation_deg.mse,
                s.translation_m.count);
  out << line;
}

void print_stage_csv(std::ostringstream& out, const char* name, const StageErrors& s) {
  out << name << ',' << s.translation_m.mean << ',' << s.translation_m.stddev << ','
      << s.translation_m.mse << ',' << s.rotation_deg.mean << ',' << s.rotation_deg.stddev << ','
      << s.rotation_deg.mse << ',' << s.translation_m.count << '\n';
}

}  // namespace

std::string format_metrics(const MetricsReport& report) {
  std::ostringstream out;
  out << "errors are mean +/- std of absolute error; mse reported alongside\n";
  print_stage(out, "raw", report.raw);
  print_stage(out, "post-pcm", report.post_pcm);
  print_stage(out, "post-dpgo", report.post_dpgo);
  print_stage(out, "trajectory", report.trajectory);
  out << "closures: raw " << report.raw_count << ", inliers " << report.inlier_count << "\n";
  out << "comm bytes (total sent): " << report.comm_bytes << "\n";
  char line[200];
  std::snprintf(line, sizeof(line),
                "timing medians: estimate %.3f ms, pcm %.3f ms, dpgo %.3f ms, tick %.3f ms\n",
                report.timing.estimate_ms_median, report.timing.pcm_ms_median,
                report.timing.dpgo_ms_median, report.timing.tick_ms_median);
  out << line;
  return out.str();
}

std::string format_metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "stage,trans_mean_m,trans_std_m,trans_mse,rot_mean_deg,rot_std_deg,rot_mse,count\n";
  print_stage_csv(out, "raw", report.raw);
  print_stage_csv(out, "post_pcm", report.post_pcm);
  print_stage_csv(out, "post_dpgo", report.post_dpgo);
  print_stage_csv(out, "trajectory", report.trajectory);
  return out.str();
}

}  // namespace rslam
