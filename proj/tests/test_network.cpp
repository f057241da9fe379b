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

#include "rslam/network.hpp"

using namespace rslam;

TEST_SUITE_BEGIN("network");

namespace {

Message separator_message(int sender, int receiver, int n_poses) {
  SeparatorPoseMsg sep;
  sep.sender = sender;
  for (int i = 0; i < n_poses; ++i) sep.poses.emplace_back(NodeKey{sender, i}, Pose2d());
  return Message{sender, receiver, 0.0, sep};
}

std::vector<Eigen::Vector2d> positions(double gap) {
  return {Eigen::Vector2d(0, 0), Eigen::Vector2d(gap, 0)};
}

}  // namespace

TEST_CASE("wire sizes follow the 8-byte scalar rule") {
  // a pose costs 24 bytes, the header 16
  CHECK(separator_message(0, 1, 10).size_bytes() == 10 * 24 + 16);
  CHECK(separator_message(0, 1, 0).size_bytes() == 16);

  Message odom{0, 1, 0.0, OdomWindowPayload{{{0.0, Pose2d()}, {0.1, Pose2d()}}}};
  CHECK(odom.size_bytes() == 2 * 32 + 16);

  Message closure{0, 1, 0.0, LoopClosurePayload{}};
  CHECK(closure.size_bytes() == 96 + 16);

  Message verdict{0, 1, 0.0, PcmVerdictPayload{0, 1, {1, 2, 3}}};
  CHECK(verdict.size_bytes() == 4 * 8 + 16);
}

TEST_CASE("in-range messages deliver immediately at zero latency") {
  NetworkSim net(NetConfig{}, 2);
  net.send(separator_message(0, 1, 2), 0.0);
  net.step(0.0, positions(5.0));
  const auto delivered = net.collect(1);
  REQUIRE(delivered.size() == 1);
  CHECK(delivered[0].sender == 0);
  CHECK(net.account().delivered[static_cast<int>(MsgKind::kSeparatorPoses)].messages == 1);
}

TEST_CASE("out-of-range endpoints hold the message until range permits") {
  NetConfig cfg;
  cfg.comm_range = 100.0;
  NetworkSim net(cfg, 2);
  net.send(separator_message(0, 1, 1), 0.0);
  net.step(0.0, positions(101.0));
  CHECK(net.collect(1).empty());
  // robots close in: the held message finally delivers
  net.step(1.0, positions(99.0));
  CHECK(net.collect(1).size() == 1);
}

TEST_CASE("messages expire after the TTL") {
  NetConfig cfg;
  cfg.ttl = 2.0;
  NetworkSim net(cfg, 2);
  net.send(separator_message(0, 1, 1), 0.0);
  net.step(1.0, positions(200.0));
  net.step(5.0, positions(1.0));  // past the TTL even though now in range
  CHECK(net.collect(1).empty());
  CHECK(net.account().sent[static_cast<int>(MsgKind::kSeparatorPoses)].messages == 1);
}

TEST_CASE("latency delays delivery") {
  NetConfig cfg;
  cfg.latency = 0.5;
  NetworkSim net(cfg, 2);
  net.send(separator_message(0, 1, 1), 0.0);
  net.step(0.2, positions(1.0));
  CHECK(net.collect(1).empty());
  net.step(0.6, positions(1.0));
  CHECK(net.collect(1).size() == 1);
}

TEST_CASE("full drop probability: sends accounted, nothing delivered") {
  NetConfig cfg;
  cfg.drop_probability = 1.0;
  NetworkSim net(cfg, 2);
  for (int i = 0; i < 10; ++i) net.send(separator_message(0, 1, 3), 0.1 * i);
  net.step(2.0, positions(1.0));
  CHECK(net.collect(1).empty());
  const auto& sent = net.account().sent[static_cast<int>(MsgKind::kSeparatorPoses)];
  CHECK(sent.messages == 10);
  CHECK(sent.bytes == 10 * (3 * 24 + 16));
  CHECK(net.account().delivered[static_cast<int>(MsgKind::kSeparatorPoses)].messages == 0);
}

TEST_CASE("accounting is deterministic under a fixed seed") {
  const auto run = [] {
    NetConfig cfg;
    cfg.drop_probability = 0.3;
    cfg.seed = 99;
    NetworkSim net(cfg, 2);
    for (int i = 0; i < 200; ++i) {
      net.send(separator_message(i % 2, 1 - i % 2, 1 + i % 4), 0.01 * i);
      net.step(0.01 * i, positions(1.0));
    }
    net.step(10.0, positions(1.0));
    CommAccount out = net.account();
    return out;
  };
  const CommAccount a = run();
  const CommAccount b = run();
  for (int k = 0; k < kMsgKindCount; ++k) {
    CHECK(a.sent[k].messages == b.sent[k].messages);
    CHECK(a.sent[k].bytes == b.sent[k].bytes);
    CHECK(a.delivered[k].messages == b.delivered[k].messages);
    CHECK(a.delivered[k].bytes == b.delivered[k].bytes);
  }
}

TEST_CASE("report formats carry every kind") {
  NetworkSim net(NetConfig{}, 2);
  net.send(separator_message(0, 1, 1), 0.0);
  const std::string text = net.format_report();
  const std::string csv = net.format_report_csv();
  for (const char* kind : {"OdomWindow", "LoopClosure", "SeparatorPoses", "PcmVerdict"}) {
    CHECK(text.find(kind) != std::string::npos);
    CHECK(csv.find(kind) != std::string::npos);
  }
}

TEST_SUITE_END();
