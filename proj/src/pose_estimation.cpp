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

#include "rslam/pose_estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rslam {
namespace {

double path_length(const RangingWindow& w, bool alpha) {
  double len = 0.0;
  for (std::size_t i = 1; i < w.entries.size(); ++i) {
    const Pose2d& a = alpha ? w.entries[i - 1].rel_alpha : w.entries[i - 1].rel_beta;
    const Pose2d& b = alpha ? w.entries[i].rel_alpha : w.entries[i].rel_beta;
    len += (b.translation() - a.translation()).norm();
  }
  return len;
}

}  // namespace

double RangingWindow::excitation_alpha() const { return path_length(*this, true); }
double RangingWindow::excitation_beta() const { return path_length(*this, false); }

int SearchConfig::steps() const {
  if (!(delta > 0.0 && delta <= EIGEN_PI)) {
    throw std::invalid_argument("SearchConfig: delta must lie in (0, pi]");
  }
  return static_cast<int>(std::ceil(EIGEN_PI / delta - 1e-12));
}

double window_residual(const Pose2d& candidate, const RangingWindow& window) {
  if (window.empty()) throw std::invalid_argument("window_residual: empty window");
  const double c = std::cos(candidate.theta), s = std::sin(candidate.theta);
  double sum = 0.0;
  for (const WindowEntry& e : window.entries) {
    const double bx = candidate.x + c * e.rel_beta.x - s * e.rel_beta.y;
    const double by = candidate.y + s * e.rel_beta.x + c * e.rel_beta.y;
    const double d = std::hypot(e.rel_alpha.x - bx, e.rel_alpha.y - by);
    const double r = e.range - d;
    sum += r * r;
  }
  return sum;
}

CoarseResult coarse_search(const RangingWindow& window, const SearchConfig& cfg) {
  if (window.empty()) throw std::invalid_argument("coarse_search: empty window");
  const int w = cfg.steps();
  double radius = window.latest_range();
  if (cfg.median_radius) {
    std::vector<double> ranges;
    ranges.reserve(window.entries.size());
    for (const WindowEntry& e : window.entries) ranges.push_back(e.range);
    std::nth_element(ranges.begin(), ranges.begin() + ranges.size() / 2, ranges.end());
    radius = ranges[ranges.size() / 2];
  }

  CoarseResult best;
  double min_residual = std::numeric_limits<double>::infinity();
  for (int i_phi = -w; i_phi <= w; ++i_phi) {
    const double phi = cfg.delta * i_phi;
    const double cx = radius * std::cos(phi);
    const double cy = radius * std::sin(phi);
    for (int i_theta = -w; i_theta <= w; ++i_theta) {
      const double theta = cfg.delta * i_theta;
      const double c = std::cos(theta), s = std::sin(theta);
      double r = 0.0;
      for (const WindowEntry& e : window.entries) {
        const double bx = cx + c * e.rel_beta.x - s * e.rel_beta.y;
        const double by = cy + s * e.rel_beta.x + c * e.rel_beta.y;
        const double d = std::hypot(e.rel_alpha.x - bx, e.rel_alpha.y - by);
        const double res = e.range - d;
        r += res * res;
        // partial sums only grow; bound against the incumbent minimum
        if (r >= min_residual) break;
      }
      if (r < min_residual) {
        min_residual = r;
        best.pose = Pose2d(cx, cy, theta);
        best.residual = r;
        best.i_phi = i_phi;
        best.i_theta = i_theta;
      }
    }
  }
  return best;
}

RefineResult refine(const Pose2d& initial, const RangingWindow& window) {
  RefineResult out;
  out.pose = initial;
  if (window.empty()) {
    out.residual = 0.0;
    out.converged = true;
    return out;
  }
  out.residual = window_residual(initial, window);

  constexpr int kMaxIterations = 100;
  constexpr double kStepTol = 1e-8;
  constexpr double kRelCostTol = 1e-10;
  double lambda = 1e-4;

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    out.iterations = iter + 1;
    const double c = std::cos(out.pose.theta), s = std::sin(out.pose.theta);
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jte = Eigen::Vector3d::Zero();
    for (const WindowEntry& w : window.entries) {
      const double rbx = w.rel_beta.x, rby = w.rel_beta.y;
      const double ux = w.rel_alpha.x - (out.pose.x + c * rbx - s * rby);
      const double uy = w.rel_alpha.y - (out.pose.y + s * rbx + c * rby);
      const double d = std::hypot(ux, uy);
      if (d < 1e-12) continue;  // range gradient undefined at coincidence
      const double e = w.range - d;
      Eigen::Vector3d jac;
      jac(0) = ux / d;
      jac(1) = uy / d;
      // d(beta position)/d(theta) = R'(theta) * rel_beta
      const double dbx = -s * rbx - c * rby;
      const double dby = c * rbx - s * rby;
      jac(2) = (ux * dbx + uy * dby) / d;
      jtj.noalias() += jac * jac.transpose();
      jte.noalias() -= jac * e;  // right-hand side of J^T J dp = -J^T e
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix3d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::LDLT<Eigen::Matrix3d> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::Vector3d dp = ldlt.solve(jte);
      if (dp.norm() < kStepTol) {
        out.converged = true;
        return out;
      }
      const Pose2d cand(out.pose.x + dp(0), out.pose.y + dp(1), out.pose.theta + dp(2));
      const double cost = window_residual(cand, window);
      if (cost <= out.residual) {
        const double drop = out.residual - cost;
        out.pose = cand;
        out.residual = cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (drop < kRelCostTol * std::max(out.residual, 1.0)) {
          out.converged = true;
          return out;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) return out;  // damping exhausted without progress
  }
  return out;
}

namespace {

// Gauss-Newton normal matrix of the window residual at the given pose.
Eigen::Matrix3d window_normal_matrix(const Pose2d& pose, const RangingWindow& window) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  for (const WindowEntry& w : window.entries) {
    const double rbx = w.rel_beta.x, rby = w.rel_beta.y;
    const double ux = w.rel_alpha.x - (pose.x + c * rbx - s * rby);
    const double uy = w.rel_alpha.y - (pose.y + s * rbx + c * rby);
    const double d = std::hypot(ux, uy);
    if (d < 1e-12) continue;
    Eigen::Vector3d jac;
    jac(0) = ux / d;
    jac(1) = uy / d;
    jac(2) = (ux * (-s * rbx - c * rby) + uy * (c * rbx - s * rby)) / d;
    jtj.noalias() += jac * jac.transpose();
  }
  return jtj;
}

}  // namespace

EstimateResult estimate_relative_pose(RobotId from, RobotId to, const RangingWindow& window,
                                      const EstimationConfig& cfg) {
  EstimateResult out;
  if (window.size() < cfg.min_window) {
    out.status = EstimateStatus::kWindowTooShort;
    return out;
  }
  if (window.excitation_alpha() < cfg.min_excitation ||
      window.excitation_beta() < cfg.min_excitation) {
    out.status = EstimateStatus::kDegenerate;
    return out;
  }
  const CoarseResult coarse = coarse_search(window, cfg.search);
  const RefineResult fine = refine(coarse.pose, window);

  out.status = EstimateStatus::kOk;
  out.closure.from = from;
  out.closure.to = to;
  out.closure.t = window.end_time();
  out.closure.relative_pose = fine.pose;
  out.closure.residual = fine.residual;
  out.closure.window_size = window.size();
  if (cfg.fitted_covariance) {
    // isotropic at the weakest constrained direction: a window that cannot
    // pin one direction may have slid along it, corrupting the others too,
    // so per-direction confidences from the local quadratic overstate what
    // the window knows
    const double dof = std::max(window.size() - 3, 1);
    const double s2 = std::max(fine.residual / dof, cfg.residual_floor * cfg.residual_floor);
    Eigen::Matrix3d jtj = window_normal_matrix(fine.pose, window);
    jtj.diagonal().array() += 1e-6 * window.size();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(jtj);
    const double weakest = std::max(eig.eigenvalues()(0), 1e-12);
    out.closure.covariance = (s2 / weakest) * Covariance3::Identity();
  } else {
    out.closure.covariance = Covariance3::Zero();
    out.closure.covariance.diagonal() << cfg.sigma_trans * cfg.sigma_trans,
        cfg.sigma_trans * cfg.sigma_trans, cfg.sigma_rot * cfg.sigma_rot;
  }
  return out;
}

ResidualGrid residual_grid(const RangingWindow& window, const SearchConfig& cfg) {
  if (window.empty()) throw std::invalid_argument("residual_grid: empty window");
  ResidualGrid grid;
  grid.steps = cfg.steps();
  grid.delta = cfg.delta;
  const int side = grid.side();
  grid.mean_residual.resize(side * side);
  const double radius = window.latest_range();
  const double n = static_cast<double>(window.size());
  for (int i_phi = -grid.steps; i_phi <= grid.steps; ++i_phi) {
    const double phi = cfg.delta * i_phi;
    for (int i_theta = -grid.steps; i_theta <= grid.steps; ++i_theta) {
      const Pose2d cand(radius * std::cos(phi), radius * std::sin(phi), cfg.delta * i_theta);
      grid.mean_residual[(i_phi + grid.steps) * side + (i_theta + grid.steps)] =
          window_residual(cand, window) / n;
    }
  }
  return grid;
}

std::vector<GridMinimum> grid_local_minima(const ResidualGrid& grid) {
  std::vector<GridMinimum> minima;
  const int side = grid.side();
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double v = grid.mean_residual[i * side + j];
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ni = (i + di + side) % side;  // both axes are periodic
          const int nj = (j + dj + side) % side;
          if (grid.mean_residual[ni * side + nj] <= v) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) minima.push_back({i - grid.steps, j - grid.steps, v});
    }
  }
  return minima;
}

}  // namespace rslam
