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

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "rslam/pcm.hpp"
#include "rslam/scenario.hpp"
#include "rslam/stats.hpp"

using namespace rslam;

TEST_SUITE_BEGIN("pcm");

namespace {

// two robots on deterministic curved paths; closures derived from truth
struct PairScenario {
  GroundTruth truth;
  OdometryLog odometry{0.06};
  std::vector<LoopClosure> closures;

  LoopClosure closure_at(double t, const Pose2d& offset = Pose2d()) const {
    LoopClosure lc;
    lc.from = 0;
    lc.to = 1;
    lc.t = t;
    lc.relative_pose = compose(between(truth.robots[0].at(t), truth.robots[1].at(t)), offset);
    lc.covariance = Eigen::Vector3d(0.25, 0.25, 0.0225).asDiagonal();
    return lc;
  }
};

PairScenario make_pair_scenario() {
  PairScenario s;
  s.truth.robots.resize(2);
  Pose2d a(0, 0, 0), b(4, 1, 0.8);
  for (int k = 0; k <= 400; ++k) {
    const double t = 0.1 * k;
    s.truth.robots[0].samples.push_back({t, a});
    s.truth.robots[1].samples.push_back({t, b});
    a = compose(a, Pose2d(0.02, 0.0, 0.004));
    b = compose(b, Pose2d(0.018, 0.0, -0.006));
  }
  for (int r = 0; r < 2; ++r) {
    std::vector<OdometrySample> log;
    for (const TimedPose& s2 : s.truth.robots[r].samples) log.push_back({s2.t, s2.pose});
    // odometry in the robot's own frame: re-express from the first pose
    const Pose2d origin = log.front().pose;
    for (OdometrySample& o : log) o.pose = between(origin, o.pose);
    s.odometry.set(r, log);
  }
  return s;
}

PcmConfig strict_config(double eps = 0.05) {
  PcmConfig cfg;
  cfg.epsilon = eps;
  cfg.adaptive_sigma = false;  // exercise the fixed-gate semantics
  cfg.sigma = Eigen::Vector3d(0.25, 0.25, 0.02).asDiagonal();
  return cfg;
}

Adjacency random_graph(std::mt19937_64& rng, int n, double p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Adjacency adj(n, n);
  for (int i = 0; i < n; ++i) {
    adj(i, i) = true;
    for (int j = i + 1; j < n; ++j) adj(i, j) = adj(j, i) = (u(rng) < p);
  }
  return adj;
}

}  // namespace

TEST_CASE("noise-free closures are consistent at every significance level") {
  const PairScenario s = make_pair_scenario();
  const LoopClosure lc_k = s.closure_at(5.0);
  const LoopClosure lc_i = s.closure_at(25.0);
  const Pose2d odom_a = between(s.truth.robots[0].at(5.0), s.truth.robots[0].at(25.0));
  const Pose2d odom_b = between(s.truth.robots[1].at(25.0), s.truth.robots[1].at(5.0));
  CHECK(cycle_error(lc_k, lc_i, odom_a, odom_b).norm() < 1e-9);
  for (const double eps : {0.01, 0.05, 0.5, 0.99}) {
    CHECK(pairwise_consistent(lc_k, lc_i, odom_a, odom_b, strict_config(eps)));
  }
}

TEST_CASE("a 10 m displaced closure fails the gate decisively") {
  const PairScenario s = make_pair_scenario();
  const LoopClosure lc_i = s.closure_at(25.0);
  LoopClosure lc_k = s.closure_at(5.0);
  // displace in the world x-direction after composing the cycle
  lc_k.relative_pose = compose(Pose2d(10.0, 0, 0), lc_k.relative_pose);
  const Pose2d odom_a = between(s.truth.robots[0].at(5.0), s.truth.robots[0].at(25.0));
  const Pose2d odom_b = between(s.truth.robots[1].at(25.0), s.truth.robots[1].at(5.0));
  const PcmConfig cfg = strict_config(0.05);
  const Eigen::Vector3d err = cycle_error(lc_k, lc_i, odom_a, odom_b);
  CHECK(mahalanobis_squared(err, cfg.sigma) == doctest::Approx(400.0).epsilon(1e-9));
  CHECK(chi2_quantile(0.05, 3) == doctest::Approx(7.8147).epsilon(1e-3));
  CHECK_FALSE(pairwise_consistent(lc_k, lc_i, odom_a, odom_b, cfg));
}

TEST_CASE("consistency verdict is symmetric in the closure order") {
  const PairScenario s = make_pair_scenario();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> jitter(0.0, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const LoopClosure lc_k = s.closure_at(5.0, Pose2d(jitter(rng), jitter(rng), 0.1 * jitter(rng)));
    const LoopClosure lc_i =
        s.closure_at(25.0, Pose2d(jitter(rng), jitter(rng), 0.1 * jitter(rng)));
    const Pose2d odom_a_ki = between(s.truth.robots[0].at(5.0), s.truth.robots[0].at(25.0));
    const Pose2d odom_b_ik = between(s.truth.robots[1].at(25.0), s.truth.robots[1].at(5.0));
    const PcmConfig cfg = strict_config(0.05);
    const bool forward = pairwise_consistent(lc_k, lc_i, odom_a_ki, odom_b_ik, cfg);
    const bool backward =
        pairwise_consistent(lc_i, lc_k, inverse(odom_a_ki), inverse(odom_b_ik), cfg);
    CHECK(forward == backward);
  }
}

TEST_CASE("mismatched robot pairs are a contract error") {
  LoopClosure a, b;
  a.from = 0;
  a.to = 1;
  b.from = 0;
  b.to = 2;
  CHECK_THROWS_AS(pairwise_consistent(a, b, Pose2d(), Pose2d(), strict_config()),
                  std::invalid_argument);
}

TEST_CASE("graph insertion grows one row at a time") {
  const PairScenario s = make_pair_scenario();
  const PcmConfig cfg = strict_config();
  ConsistencyGraph graph;
  insert_closure(graph, s.closure_at(5.0), s.odometry, cfg);
  CHECK(graph.size() == 1);
  CHECK(graph.adjacency(0, 0));

  insert_closure(graph, s.closure_at(10.0), s.odometry, cfg);
  insert_closure(graph, s.closure_at(15.0, Pose2d(6.0, 0, 0)), s.odometry, cfg);  // outlier
  REQUIRE(graph.size() == 3);
  CHECK(graph.adjacency(0, 1));
  CHECK_FALSE(graph.adjacency(0, 2));
  CHECK_FALSE(graph.adjacency(1, 2));
  // duplicate of an existing inlier agrees with every inlier
  insert_closure(graph, s.closure_at(10.05), s.odometry, cfg);
  REQUIRE(graph.size() == 4);
  const int dup = 2;  // time-ordered position of t=10.05
  CHECK(graph.nodes[dup].t == 10.05);
  CHECK(graph.adjacency(dup, 0));
  CHECK(graph.adjacency(dup, 1));
}

TEST_CASE("incremental graph equals batch construction for any arrival order") {
  const PairScenario s = make_pair_scenario();
  const PcmConfig cfg = strict_config();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 0.3);

  std::vector<LoopClosure> closures;
  for (int i = 0; i < 12; ++i) {
    closures.push_back(
        s.closure_at(2.0 + 3.0 * i, Pose2d(jitter(rng), jitter(rng), 0.05 * jitter(rng))));
  }
  // batch: insert in time order
  ConsistencyGraph batch;
  for (const LoopClosure& lc : closures) insert_closure(batch, lc, s.odometry, cfg);

  for (int shuffle = 0; shuffle < 5; ++shuffle) {
    std::vector<LoopClosure> shuffled = closures;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ConsistencyGraph incremental;
    for (const LoopClosure& lc : shuffled) insert_closure(incremental, lc, s.odometry, cfg);
    REQUIRE(incremental.size() == batch.size());
    for (int i = 0; i < batch.size(); ++i) {
      CHECK(incremental.nodes[i].t == batch.nodes[i].t);
      for (int j = 0; j < batch.size(); ++j) {
        CHECK(incremental.adjacency(i, j) == batch.adjacency(i, j));
      }
    }
  }
}

TEST_CASE("exact clique on bespoke graphs") {
  // fully consistent graph: everything returned
  Adjacency full(5, 5);
  full.setConstant(true);
  CHECK(max_clique_exact(full) == std::vector<int>{0, 1, 2, 3, 4});

  // two disjoint cliques of size 5 and 3
  Adjacency two(8, 8);
  two.setConstant(false);
  for (int i = 0; i < 8; ++i) two(i, i) = true;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) two(i, j) = true;
  for (int i = 5; i < 8; ++i)
    for (int j = 5; j < 8; ++j) two(i, j) = true;
  CHECK(max_clique_exact(two) == std::vector<int>{0, 1, 2, 3, 4});

  CHECK(max_clique_exact(Adjacency(0, 0)).empty());
}

TEST_CASE("exact clique matches subset enumeration on random graphs") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_real_distribution<double> density(0.2, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    const Adjacency adj = random_graph(rng, size(rng), density(rng));
    const std::vector<int> expected = oracles::brute_force_max_clique(adj);
    const std::vector<int> got = max_clique_exact(adj);
    CHECK(got.size() == expected.size());
    CHECK(got == expected);  // lexicographic tie-break must agree too
  }
}

TEST_CASE("incremental clique heuristic") {
  std::mt19937_64 rng(11);
  // extending a previous clique with a universally adjacent node
  Adjacency adj = random_graph(rng, 10, 0.5);
  for (int i = 0; i < 10; ++i) adj(9, i) = adj(i, 9) = true;
  const std::vector<int> prev = max_clique_exact(adj);
  // adding node 10 adjacent to everything
  Adjacency bigger(11, 11);
  bigger.setConstant(false);
  bigger.topLeftCorner(10, 10) = adj;
  for (int i = 0; i <= 10; ++i) bigger(10, i) = bigger(i, 10) = true;
  const std::vector<int> extended = max_clique_incremental(bigger, prev);
  CHECK(extended.size() == prev.size() + 1);

  // quality: >= 0.9x the optimum in at least 95 of 100 random graphs
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Adjacency g = random_graph(rng, 5 + trial % 16, 0.6);
    const std::size_t exact = max_clique_exact(g).size();
    const std::vector<int> heuristic = max_clique_incremental(g, {});
    // verify it is a clique
    for (std::size_t i = 0; i < heuristic.size(); ++i) {
      for (std::size_t j = i + 1; j < heuristic.size(); ++j) {
        REQUIRE(g(heuristic[i], heuristic[j]));
      }
    }
    if (heuristic.size() >= 0.9 * exact) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("filter_inliers rejects gross outliers and keeps the pack") {
  const PairScenario s = make_pair_scenario();
  std::mt19937_64 rng(13);
  std::normal_distribution<double> small(0.0, 0.05);
  std::uniform_real_distribution<double> big_pos(-6.0, 6.0);
  std::uniform_real_distribution<double> big_ang(-EIGEN_PI, EIGEN_PI);

  std::vector<LoopClosure> closures;
  std::vector<bool> truth_label;  // true = genuine
  for (int i = 0; i < 40; ++i) {
    const double t = 1.0 + 0.9 * i;
    if (i % 3 == 2) {  // ~33% gross outliers, uniform random poses
      LoopClosure lc = s.closure_at(t);
      lc.relative_pose = Pose2d(big_pos(rng), big_pos(rng), big_ang(rng));
      closures.push_back(lc);
      truth_label.push_back(false);
    } else {
      closures.push_back(s.closure_at(t, Pose2d(small(rng), small(rng), 0.3 * small(rng))));
      truth_label.push_back(true);
    }
  }
  PcmConfig cfg = strict_config(0.1);
  const std::vector<LoopClosure> inliers = filter_inliers(closures, s.odometry, cfg);

  int kept_genuine = 0, kept_outlier = 0, genuine_total = 0;
  for (std::size_t i = 0; i < closures.size(); ++i) {
    const bool kept = std::any_of(inliers.begin(), inliers.end(), [&](const LoopClosure& lc) {
      return lc.t == closures[i].t;
    });
    genuine_total += truth_label[i];
    if (kept && truth_label[i]) ++kept_genuine;
    if (kept && !truth_label[i]) ++kept_outlier;
  }
  CHECK(kept_outlier == 0);
  CHECK(kept_genuine >= static_cast<int>(0.95 * genuine_total));

  // every returned pair is mutually consistent
  for (std::size_t i = 0; i < inliers.size(); ++i) {
    for (std::size_t j = i + 1; j < inliers.size(); ++j) {
      const auto a_k = s.odometry.pose_at(0, inliers[i].t);
      const auto a_i = s.odometry.pose_at(0, inliers[j].t);
      const auto b_k = s.odometry.pose_at(1, inliers[i].t);
      const auto b_i = s.odometry.pose_at(1, inliers[j].t);
      REQUIRE(a_k);
      REQUIRE(a_i);
      REQUIRE(b_k);
      REQUIRE(b_i);
      CHECK(pairwise_consistent(inliers[i], inliers[j], between(*a_k, *a_i), between(*b_i, *b_k),
                                cfg));
    }
  }
}

TEST_CASE("inlier count is non-increasing in the significance level") {
  const PairScenario s = make_pair_scenario();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::vector<LoopClosure> closures;
  for (int i = 0; i < 35; ++i) {
    closures.push_back(
        s.closure_at(1.0 + i, Pose2d(noise(rng), noise(rng), 0.3 * noise(rng))));
  }
  std::size_t previous = closures.size() + 1;
  for (const double eps : {0.01, 0.05, 0.1, 0.2, 0.5, 0.8}) {
    PcmConfig cfg = strict_config(eps);
    cfg.sigma = Eigen::Vector3d(0.09, 0.09, 0.01).asDiagonal();
    const std::size_t count = filter_inliers(closures, s.odometry, cfg).size();
    CHECK(count <= previous);
    previous = count;
  }
}

TEST_CASE("no closures means no inliers") {
  OdometryLog empty;
  CHECK(filter_inliers({}, empty, strict_config()).empty());
}

TEST_CASE("adaptive gate scales with the closures' own covariances") {
  const PairScenario s = make_pair_scenario();
  PcmConfig cfg;
  cfg.epsilon = 0.05;
  REQUIRE(cfg.adaptive_sigma);

  LoopClosure tight_k = s.closure_at(5.0);
  LoopClosure tight_i = s.closure_at(25.0, Pose2d(0.2, 0.0, 0.0));
  tight_k.covariance = tight_i.covariance = Eigen::Vector3d(1e-4, 1e-4, 1e-4).asDiagonal();
  const Pose2d odom_a = between(s.truth.robots[0].at(5.0), s.truth.robots[0].at(25.0));
  const Pose2d odom_b = between(s.truth.robots[1].at(25.0), s.truth.robots[1].at(5.0));
  // confident closures: a 0.2 m cycle error is decisive
  CHECK_FALSE(pairwise_consistent(tight_k, tight_i, odom_a, odom_b, cfg));

  LoopClosure loose_k = tight_k;
  LoopClosure loose_i = tight_i;
  loose_k.covariance = loose_i.covariance = Eigen::Vector3d(0.25, 0.25, 0.04).asDiagonal();
  // the same error is well inside a low-confidence pair's gate
  CHECK(pairwise_consistent(loose_k, loose_i, odom_a, odom_b, cfg));
}

TEST_CASE("adjacency dump is a readable grid") {
  Adjacency adj(2, 2);
  adj << true, false, false, true;
  CHECK(format_adjacency(adj) == "1 .\n. 1\n");
}

TEST_SUITE_END();
