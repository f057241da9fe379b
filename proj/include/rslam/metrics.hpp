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

#ifndef RSLAM_METRICS_HPP_
#define RSLAM_METRICS_HPP_

#include <string>
#include <vector>

#include "rslam/simulation.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct ErrorStats {
  double mean = 0.0;
  double stddev = 0.0;
  double mse = 0.0;
  double max = 0.0;
  int count = 0;
};

ErrorStats error_stats(const std::vector<double>& values);

struct StageErrors {
  ErrorStats translation_m;
  ErrorStats rotation_deg;
};

/// Per-stage accuracy plus the bookkeeping counters reported by a run.
/// raw / post_pcm compare closure estimates against truth-derived relative
/// poses; post_dpgo compares relative poses recomputed from the optimized
/// trajectories at the surviving closure timestamps; trajectory holds
/// absolute errors after a single joint SE(2) alignment to truth.
struct MetricsReport {
  StageErrors raw;
  StageErrors post_pcm;
  StageErrors post_dpgo;
  StageErrors trajectory;
  int raw_count = 0;
  int inlier_count = 0;
  TimingStats timing;
  std::int64_t comm_bytes = 0;
};

/// Rigid SE(2) best fit mapping `source` points onto `target` (least
/// squares over all point pairs jointly). Throws if fewer than 2 pairs.
Pose2d align_se2(const std::vector<Eigen::Vector2d>& source,
                 const std::vector<Eigen::Vector2d>& target);

/// (translation m, rotation deg) error of each closure against the
/// truth-derived relative pose at its timestamp.
std::vector<std::pair<double, double>> closure_errors(const std::vector<LoopClosure>& closures,
                                                      const GroundTruth& truth);

/// Full report for a finished run. Throws std::runtime_error when estimate
/// and truth share no timestamps.
MetricsReport compute_metrics(const SimulationResult& sim, const GroundTruth& truth);

std::string format_metrics(const MetricsReport& report);
std::string format_metrics_csv(const MetricsReport& report);

}  // namespace rslam

#endif  // RSLAM_METRICS_HPP_
