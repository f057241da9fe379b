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

#ifndef RSLAM_NETWORK_HPP_
#define RSLAM_NETWORK_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "rslam/dpgo.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct NetConfig {
  double comm_range = 100.0;      // m; default matches the UWB range limit
  double latency = 0.0;           // s
  double drop_probability = 0.0;  // in [0, 1]
  double ttl = 10.0;              // s a message may wait for range
  std::uint64_t seed = 0;
};

enum class MsgKind : int { kOdomWindow = 0, kLoopClosure, kSeparatorPoses, kPcmVerdict };
constexpr int kMsgKindCount = 4;
const char* msg_kind_name(MsgKind kind);

struct OdomWindowPayload {
  std::vector<OdometrySample> samples;
};

struct LoopClosurePayload {
  LoopClosure closure;
};

struct PcmVerdictPayload {
  RobotId from = 0;  // the ordered pair the verdict covers
  RobotId to = 0;
  std::vector<int> inlier_indices;  // into the pair's time-ordered closure list
};

using MessagePayload =
    std::variant<OdomWindowPayload, LoopClosurePayload, SeparatorPoseMsg, PcmVerdictPayload>;

/// Wire rule: every scalar costs 8 bytes, a pose 24, a fixed header 16
/// (sender, receiver, kind, timestamp at 4 bytes each).
///   OdomWindow     n samples   -> n * 32 payload bytes
///   LoopClosure                -> 96  (t, pose, covariance 6, residual, window size)
///   SeparatorPoses n poses     -> n * 24
///   PcmVerdict     n indices   -> (1 + n) * 8
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kScalarBytes = 8;
constexpr std::size_t kPoseBytes = 3 * kScalarBytes;

std::size_t payload_bytes(const MessagePayload& payload);
MsgKind payload_kind(const MessagePayload& payload);

struct Message {
  RobotId sender = 0;
  RobotId receiver = 0;
  double sent_at = 0.0;
  MessagePayload payload;

  MsgKind kind() const { return payload_kind(payload); }
  std::size_t size_bytes() const { return kHeaderBytes + payload_bytes(payload); }
};

struct KindTotals {
  std::int64_t messages = 0;
  std::int64_t bytes = 0;
};

struct CommAccount {
  std::array<KindTotals, kMsgKindCount> sent;      // counted at send time
  std::array<KindTotals, kMsgKindCount> delivered;

  std::int64_t total_sent_bytes() const;
  const KindTotals& of(MsgKind kind) const { return sent[static_cast<int>(kind)]; }
};

CommAccount operator-(const CommAccount& a, const CommAccount& b);

/// Deterministic range-limited store-and-forward network. Messages wait in
/// a queue until their latency has elapsed and both endpoints are within
/// comm_range, then land in the receiver's mailbox; waiting longer than the
/// TTL expires them. Drops are decided at send time with the seeded RNG so
/// accounting still sees the attempt.
class NetworkSim {
 public:
  explicit NetworkSim(const NetConfig& cfg, int n_robots);

  void send(Message msg, double now);

  /// Advances the clock: moves deliverable messages into mailboxes.
  /// `positions[r]` is robot r's current true position.
  void step(double now, const std::vector<Eigen::Vector2d>& positions);

  /// Drains robot's mailbox.
  std::vector<Message> collect(RobotId robot);

  const CommAccount& account() const { return account_; }

  /// Per-kind counts/bytes as a text table.
  std::string format_report() const;
  /// Machine-readable twin: "kind,sent_messages,sent_bytes,delivered_messages,delivered_bytes".
  std::string format_report_csv() const;

 private:
  struct Pending {
    Message msg;
    double ready_at = 0.0;
    double expires_at = 0.0;
    bool doomed = false;
  };

  NetConfig cfg_;
  std::deque<Pending> queue_;
  std::vector<std::vector<Message>> mailboxes_;
  CommAccount account_;
  std::mt19937_64 rng_;
};

}  // namespace rslam

#endif  // RSLAM_NETWORK_HPP_
