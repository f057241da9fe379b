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

// Independent reference implementations used only to check the library.
// Everything here is written the slow, obvious way on purpose and must not
// call into the code paths it validates.

#ifndef RSLAM_TESTS_ORACLES_HPP_
#define RSLAM_TESTS_ORACLES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rslam/pcm.hpp"
#include "rslam/pose_estimation.hpp"
#include "rslam/types.hpp"

namespace oracles {

// Straightforward re-evaluation of the windowed ranging residual.
inline double window_residual(const rslam::Pose2d& candidate, const rslam::RangingWindow& w) {
  double sum = 0.0;
  for (const rslam::WindowEntry& e : w.entries) {
    Eigen::Matrix3d cand = Eigen::Matrix3d::Identity();
    cand.topLeftCorner<2, 2>() = Eigen::Rotation2Dd(candidate.theta).toRotationMatrix();
    cand.topRightCorner<2, 1>() = candidate.translation();
    Eigen::Matrix3d beta = Eigen::Matrix3d::Identity();
    beta.topLeftCorner<2, 2>() = Eigen::Rotation2Dd(e.rel_beta.theta).toRotationMatrix();
    beta.topRightCorner<2, 1>() = e.rel_beta.translation();
    const Eigen::Vector2d beta_pos = (cand * beta).topRightCorner<2, 1>();
    const double predicted = (e.rel_alpha.translation() - beta_pos).norm();
    sum += (e.range - predicted) * (e.range - predicted);
  }
  return sum;
}

// Exhaustive polar-grid argmin with no early abort; first strict improvement
// wins, matching the documented tie-break.
struct GridPick {
  int i_phi = 0;
  int i_theta = 0;
  double residual = 0.0;
};

inline GridPick exhaustive_coarse_search(const rslam::RangingWindow& w, double delta) {
  const int steps = static_cast<int>(std::ceil(EIGEN_PI / delta));
  const double radius = w.entries.back().range;
  GridPick best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int i_phi = -steps; i_phi <= steps; ++i_phi) {
    for (int i_theta = -steps; i_theta <= steps; ++i_theta) {
      const rslam::Pose2d cand(radius * std::cos(delta * i_phi), radius * std::sin(delta * i_phi),
                               delta * i_theta);
      double r = 0.0;
      const double c = std::cos(cand.theta), s = std::sin(cand.theta);
      for (const rslam::WindowEntry& e : w.entries) {
        const double bx = cand.x + c * e.rel_beta.x - s * e.rel_beta.y;
        const double by = cand.y + s * e.rel_beta.x + c * e.rel_beta.y;
        const double d = std::hypot(e.rel_alpha.x - bx, e.rel_alpha.y - by);
        r += (e.range - d) * (e.range - d);
      }
      if (r < best_residual) {
        best_residual = r;
        best = {i_phi, i_theta, r};
      }
    }
  }
  return best;
}

// Largest clique by enumerating every vertex subset (n <= ~22); ties go to
// the lexicographically smallest index set.
inline std::vector<int> brute_force_max_clique(const rslam::Adjacency& adj) {
  const int n = static_cast<int>(adj.rows());
  std::vector<std::uint32_t> neighbor_bits(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && adj(i, j)) neighbor_bits[i] |= (1u << j);
    }
  }
  std::uint32_t best_mask = 0;
  int best_size = 0;
  const auto lex_smaller = [&](std::uint32_t a, std::uint32_t b) {
    // compare as sorted index sequences
    for (int v = 0; v < n; ++v) {
      const bool ina = a & (1u << v), inb = b & (1u << v);
      if (ina != inb) return ina;  // containing the smaller vertex first wins
    }
    return false;
  };
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size < best_size) continue;
    bool clique = true;
    for (int v = 0; v < n && clique; ++v) {
      if (!(mask & (1u << v))) continue;
      const std::uint32_t rest = mask & ~(1u << v);
      if ((neighbor_bits[v] & rest) != rest) clique = false;
    }
    if (!clique) continue;
    if (size > best_size || (size == best_size && lex_smaller(mask, best_mask))) {
      best_size = size;
      best_mask = mask;
    }
  }
  std::vector<int> out;
  for (int v = 0; v < n; ++v) {
    if (best_mask & (1u << v)) out.push_back(v);
  }
  return out;
}

// Chi-squared CDF by adaptive Simpson quadrature. The substitution x = u^2
// turns the density into a smooth integrand even for dof = 1 (where the
// raw density blows up at the origin): integrate g(u) = 2 u f(u^2).
inline double chi2_pdf(double x, int dof) {
  if (x <= 0.0) return 0.0;
  const double a = 0.5 * dof;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

inline double chi2_sub_integrand(double u, int dof) {
  if (u <= 0.0) return dof == 1 ? std::sqrt(2.0 / EIGEN_PI) : 0.0;
  return 2.0 * u * chi2_pdf(u * u, dof);
}

inline double simpson(double lo, double hi, int dof, int depth, double flo, double fmid,
                      double fhi) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
  const double flmid = chi2_sub_integrand(lmid, dof), frmid = chi2_sub_integrand(rmid, dof);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
  if (depth <= 0 || std::abs(left + right - whole) < 1e-14) return left + right;
  return simpson(lo, mid, dof, depth - 1, flo, flmid, fmid) +
         simpson(mid, hi, dof, depth - 1, fmid, frmid, fhi);
}

inline double chi2_cdf_quadrature(double x, int dof) {
  if (x <= 0.0) return 0.0;
  const double hi = std::sqrt(x);
  const double mid = 0.5 * hi;
  return simpson(0.0, hi, dof, 48, chi2_sub_integrand(0.0, dof), chi2_sub_integrand(mid, dof),
                 chi2_sub_integrand(hi, dof));
}

inline double chi2_quantile_quadrature(double epsilon, int dof) {
  const double target = 1.0 - epsilon;
  double lo = 0.0, hi = 1.0;
  while (chi2_cdf_quadrature(hi, dof) < target) hi *= 2.0;
  for (int i = 0; i < 120; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf_quadrature(mid, dof) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline rslam::Pose2d random_pose(std::mt19937_64& rng, double span = 5.0) {
  std::uniform_real_distribution<double> pos(-span, span);
  std::uniform_real_distribution<double> ang(-EIGEN_PI, EIGEN_PI);
  return rslam::Pose2d(pos(rng), pos(rng), ang(rng));
}

// A noisy window from two short random walks plus the true relative pose at
// the window end.
struct SyntheticWindow {
  rslam::RangingWindow window;
  rslam::Pose2d truth;
};

inline SyntheticWindow random_window(std::mt19937_64& rng, int size, double range_noise,
                                     double step = 0.05) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> ang(-EIGEN_PI, EIGEN_PI);
  std::normal_distribution<double> walk(0.0, step);
  std::normal_distribution<double> turn(0.0, 0.15);
  std::normal_distribution<double> noise(0.0, range_noise > 0 ? range_noise : 1e-30);

  std::vector<rslam::Pose2d> a(size), b(size);
  a[0] = rslam::Pose2d(pos(rng), pos(rng), ang(rng));
  b[0] = rslam::Pose2d(pos(rng), pos(rng), ang(rng));
  for (int i = 1; i < size; ++i) {
    a[i] = rslam::compose(a[i - 1], rslam::Pose2d(0.05 + std::abs(walk(rng)), walk(rng), turn(rng)));
    b[i] = rslam::compose(b[i - 1], rslam::Pose2d(0.05 + std::abs(walk(rng)), walk(rng), turn(rng)));
  }
  SyntheticWindow out;
  out.window.entries.resize(size);
  for (int i = 0; i < size; ++i) {
    rslam::WindowEntry& e = out.window.entries[i];
    e.t = i;
    e.rel_alpha = (i == size - 1) ? rslam::Pose2d() : rslam::between(a.back(), a[i]);
    e.rel_beta = (i == size - 1) ? rslam::Pose2d() : rslam::between(b.back(), b[i]);
    e.range = (a[i].translation() - b[i].translation()).norm();
    if (range_noise > 0) e.range = std::max(0.0, e.range + noise(rng));
  }
  out.truth = rslam::between(a.back(), b.back());
  return out;
}

}  // namespace oracles

#endif  // RSLAM_TESTS_ORACLES_HPP_
