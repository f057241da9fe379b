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

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rslam/pose_estimation.hpp"
#include "rslam/scenario.hpp"
#include "rslam/experiment.hpp"

using namespace rslam;

TEST_SUITE_BEGIN("pose_estimation");

namespace {

// window from two deterministic curved paths, zero noise
oracles::SyntheticWindow curved_window(int size) {
  std::vector<Pose2d> a(size), b(size);
  a[0] = Pose2d(0, 0, 0);
  b[0] = Pose2d(3, 1, 1.0);
  for (int i = 1; i < size; ++i) {
    a[i] = compose(a[i - 1], Pose2d(0.06, 0.0, 0.02));
    b[i] = compose(b[i - 1], Pose2d(0.05, 0.0, -0.03));
  }
  oracles::SyntheticWindow out;
  out.window.entries.resize(size);
  for (int i = 0; i < size; ++i) {
    WindowEntry& e = out.window.entries[i];
    e.t = i;
    e.rel_alpha = (i == size - 1) ? Pose2d() : between(a.back(), a[i]);
    e.rel_beta = (i == size - 1) ? Pose2d() : between(b.back(), b[i]);
    e.range = (a[i].translation() - b[i].translation()).norm();
  }
  out.truth = between(a.back(), b.back());
  return out;
}

}  // namespace

TEST_CASE("search grid size follows the angular step") {
  SearchConfig cfg;
  cfg.delta = 0.1;
  CHECK(cfg.steps() == 32);  // ceil(pi / 0.1)
  const int side = 2 * cfg.steps() + 1;
  CHECK(side == 65);
  CHECK(side * side == 4225);
  cfg.delta = EIGEN_PI;
  CHECK(cfg.steps() == 1);
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.steps(), std::invalid_argument);
  cfg.delta = 4.0;
  CHECK_THROWS_AS(cfg.steps(), std::invalid_argument);
}

TEST_CASE("residual vanishes at the true pose of a noise-free window") {
  const auto sw = curved_window(50);
  CHECK(window_residual(sw.truth, sw.window) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("single-entry window: any pose on the ranging circle has zero residual") {
  RangingWindow w;
  w.entries.push_back({0.0, Pose2d(), Pose2d(), 2.5});
  CHECK(window_residual(Pose2d(2.5, 0, 0), w) == doctest::Approx(0.0));
  CHECK(window_residual(Pose2d(0, 2.5, 1.0), w) == doctest::Approx(0.0));
  const double c = std::cos(0.7), s = std::sin(0.7);
  CHECK(window_residual(Pose2d(2.5 * c, 2.5 * s, -0.3), w) == doctest::Approx(0.0));
}

TEST_CASE("residual rejects an empty window") {
  RangingWindow w;
  CHECK_THROWS_AS(window_residual(Pose2d(), w), std::invalid_argument);
  SearchConfig cfg;
  CHECK_THROWS_AS(coarse_search(w, cfg), std::invalid_argument);
}

TEST_CASE("residual agrees with an independent re-evaluation") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sw = oracles::random_window(rng, 20, 0.1);
    const Pose2d candidate = oracles::random_pose(rng);
    const double expected = oracles::window_residual(candidate, sw.window);
    CHECK(window_residual(candidate, sw.window) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("early-abort search matches the exhaustive scan exactly") {
  std::mt19937_64 rng(37);
  SearchConfig cfg;
  cfg.delta = 0.2;
  for (int trial = 0; trial < 100; ++trial) {
    const auto sw = oracles::random_window(rng, 25, 0.1);
    const CoarseResult got = coarse_search(sw.window, cfg);
    const oracles::GridPick expected = oracles::exhaustive_coarse_search(sw.window, cfg.delta);
    CHECK(got.i_phi == expected.i_phi);
    CHECK(got.i_theta == expected.i_theta);
    CHECK(got.residual == doctest::Approx(expected.residual).epsilon(1e-12));
  }
}

TEST_CASE("coarse search lands within one grid cell of a noise-free truth") {
  const auto sw = curved_window(50);
  SearchConfig cfg;
  cfg.delta = 0.1;
  const CoarseResult got = coarse_search(sw.window, cfg);
  const double radius = sw.window.latest_range();
  CHECK((got.pose.translation() - sw.truth.translation()).norm() <= cfg.delta * radius);
  CHECK(std::abs(wrap_angle(got.pose.theta - sw.truth.theta)) <= cfg.delta);
}

TEST_CASE("median radius shields the candidate circle from a stale end sample") {
  auto sw = curved_window(50);
  sw.window.entries.back().range += 3.0;  // late NLOS spike
  SearchConfig latest;
  latest.delta = 0.1;
  SearchConfig median = latest;
  median.median_radius = true;
  const CoarseResult with_latest = coarse_search(sw.window, latest);
  const CoarseResult with_median = coarse_search(sw.window, median);
  const double err_latest = (with_latest.pose.translation() - sw.truth.translation()).norm();
  const double err_median = (with_median.pose.translation() - sw.truth.translation()).norm();
  CHECK(err_median < err_latest);
}

TEST_CASE("refinement is monotone and a fixed point at the optimum") {
  const auto sw = curved_window(50);
  // the exact optimum of the noise-free window is the truth
  const RefineResult at_opt = refine(sw.truth, sw.window);
  CHECK(at_opt.converged);
  CHECK((at_opt.pose.vector() - sw.truth.vector()).norm() < 1e-7);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto noisy = oracles::random_window(rng, 15, 0.2);
    const Pose2d init = oracles::random_pose(rng);
    const double initial_cost = window_residual(init, noisy.window);
    const RefineResult out = refine(init, noisy.window);
    CHECK(out.residual <= initial_cost + 1e-12);
  }
}

TEST_CASE("refinement improves on the coarse estimate on noisy windows") {
  std::mt19937_64 rng(43);
  SearchConfig cfg;
  cfg.delta = 0.2;
  double coarse_err = 0.0, refined_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto sw = oracles::random_window(rng, 40, 0.05);
    const CoarseResult coarse = coarse_search(sw.window, cfg);
    const RefineResult fine = refine(coarse.pose, sw.window);
    coarse_err += (coarse.pose.translation() - sw.truth.translation()).norm();
    refined_err += (fine.pose.translation() - sw.truth.translation()).norm();
  }
  CHECK(refined_err <= coarse_err);
}

TEST_CASE("estimate_relative_pose recovers a noise-free pose tightly") {
  const auto sw = curved_window(50);
  EstimationConfig cfg;
  cfg.search.delta = 0.1;
  const EstimateResult out = estimate_relative_pose(0, 1, sw.window, cfg);
  REQUIRE(out.ok());
  CHECK((out.closure.relative_pose.translation() - sw.truth.translation()).norm() <= 0.01);
  CHECK(std::abs(wrap_angle(out.closure.relative_pose.theta - sw.truth.theta)) <=
        0.1 * EIGEN_PI / 180.0);
  CHECK(out.closure.window_size == 50);
  CHECK(out.closure.residual >= 0.0);
  CHECK(is_valid_covariance(out.closure.covariance));
}

TEST_CASE("short and unexcited windows are skipped, not fatal") {
  EstimationConfig cfg;
  cfg.min_window = 10;

  RangingWindow shorty;
  for (int i = 0; i < 5; ++i) shorty.entries.push_back({double(i), Pose2d(), Pose2d(), 1.0});
  CHECK(estimate_relative_pose(0, 1, shorty, cfg).status == EstimateStatus::kWindowTooShort);

  // stationary pair: the landscape is rotationally symmetric
  RangingWindow still;
  for (int i = 0; i < 20; ++i) still.entries.push_back({double(i), Pose2d(), Pose2d(), 2.0});
  CHECK(estimate_relative_pose(0, 1, still, cfg).status == EstimateStatus::kDegenerate);
}

TEST_CASE("estimation error shrinks as the window grows") {
  EstimationConfig cfg;
  cfg.search.delta = 0.1;
  double previous = std::numeric_limits<double>::infinity();
  for (const int tau : {10, 50, 200}) {
    double err = 0.0;
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      ScenarioConfig scen;
      scen.n_robots = 2;
      scen.duration = 40.0;
      scen.seed = seed;
      NoiseConfig noise;
      noise.uwb_sigma = 0.1;
      noise.rng_seed = seed;
      const Dataset ds = make_dataset(generate_trajectories(scen), noise);
      for (const LabeledWindow& lw : collect_windows(ds, 0, 1, tau, 4.0, 5)) {
        const EstimateResult out = estimate_relative_pose(0, 1, lw.window, cfg);
        if (!out.ok()) continue;
        err += (out.closure.relative_pose.translation() - lw.truth_rel.translation()).norm();
        ++count;
      }
    }
    REQUIRE(count > 0);
    err /= count;
    CHECK(err <= previous);
    previous = err;
  }
}

TEST_CASE("mirror symmetry: flipping both paths mirrors the estimate") {
  const auto sw = curved_window(50);
  oracles::SyntheticWindow mirrored = sw;
  for (WindowEntry& e : mirrored.window.entries) {
    e.rel_alpha = Pose2d(e.rel_alpha.x, -e.rel_alpha.y, -e.rel_alpha.theta);
    e.rel_beta = Pose2d(e.rel_beta.x, -e.rel_beta.y, -e.rel_beta.theta);
  }
  EstimationConfig cfg;
  cfg.search.delta = 0.1;
  const EstimateResult a = estimate_relative_pose(0, 1, sw.window, cfg);
  const EstimateResult b = estimate_relative_pose(0, 1, mirrored.window, cfg);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(b.closure.relative_pose.x == doctest::Approx(a.closure.relative_pose.x).epsilon(1e-6));
  CHECK(b.closure.relative_pose.y == doctest::Approx(-a.closure.relative_pose.y).epsilon(1e-6));
  CHECK(std::abs(wrap_angle(b.closure.relative_pose.theta + a.closure.relative_pose.theta)) <
        1e-6);
}

TEST_CASE("near-collinear paths produce a multimodal residual landscape") {
  // two parallel straight-line trajectories
  const int size = 50;
  std::vector<Pose2d> a(size), b(size);
  a[0] = Pose2d(0, 0, 0);
  b[0] = Pose2d(0, 3, 0);
  for (int i = 1; i < size; ++i) {
    a[i] = compose(a[i - 1], Pose2d(0.05, 0, 0));
    b[i] = compose(b[i - 1], Pose2d(0.05, 0, 0));
  }
  RangingWindow w;
  for (int i = 0; i < size; ++i) {
    WindowEntry e;
    e.t = i;
    e.rel_alpha = (i == size - 1) ? Pose2d() : between(a.back(), a[i]);
    e.rel_beta = (i == size - 1) ? Pose2d() : between(b.back(), b[i]);
    e.range = (a[i].translation() - b[i].translation()).norm();
    w.entries.push_back(e);
  }
  SearchConfig cfg;
  cfg.delta = 0.1;
  const ResidualGrid grid = residual_grid(w, cfg);
  CHECK(static_cast<int>(grid.mean_residual.size()) == grid.side() * grid.side());
  const auto minima = grid_local_minima(grid);
  REQUIRE(minima.size() >= 2);
  // the two dominant minima sit at mirrored bearings, far apart in phi
  double best_sep = 0.0;
  for (std::size_t i = 0; i < minima.size(); ++i) {
    for (std::size_t j = i + 1; j < minima.size(); ++j) {
      best_sep = std::max(best_sep,
                          std::abs(double(minima[i].i_phi - minima[j].i_phi)) * grid.delta);
    }
  }
  CHECK(best_sep > 10 * cfg.delta);
}

TEST_SUITE_END();
