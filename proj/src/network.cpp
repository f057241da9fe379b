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

#include "rslam/network.hpp"

#include <sstream>

namespace rslam {

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::kOdomWindow: return "OdomWindow";
    case MsgKind::kLoopClosure: return "LoopClosure";
    case MsgKind::kSeparatorPoses: return "SeparatorPoses";
    case MsgKind::kPcmVerdict: return "PcmVerdict";
  }
  return "?";
}

std::size_t payload_bytes(const MessagePayload& payload) {
  struct Sizer {
    std::size_t operator()(const OdomWindowPayload& p) const {
      return p.samples.size() * (kScalarBytes + kPoseBytes);
    }
    std::size_t operator()(const LoopClosurePayload&) const {
      return kScalarBytes + kPoseBytes + 6 * kScalarBytes + 2 * kScalarBytes;
    }
    std::size_t operator()(const SeparatorPoseMsg& p) const {
      return p.poses.size() * kPoseBytes;
    }
    std::size_t operator()(const PcmVerdictPayload& p) const {
      return (1 + p.inlier_indices.size()) * kScalarBytes;
    }
  };
  return std::visit(Sizer{}, payload);
}

MsgKind payload_kind(const MessagePayload& payload) {
  switch (payload.index()) {
    case 0: return MsgKind::kOdomWindow;
    case 1: return MsgKind::kLoopClosure;
    case 2: return MsgKind::kSeparatorPoses;
    default: return MsgKind::kPcmVerdict;
  }
}

std::int64_t CommAccount::total_sent_bytes() const {
  std::int64_t total = 0;
  for (const KindTotals& k : sent) total += k.bytes;
  return total;
}

CommAccount operator-(const CommAccount& a, const CommAccount& b) {
  CommAccount out;
  for (int i = 0; i < kMsgKindCount; ++i) {
    out.sent[i] = {a.sent[i].messages - b.sent[i].messages, a.sent[i].bytes - b.sent[i].bytes};
    out.delivered[i] = {a.delivered[i].messages - b.delivered[i].messages,
                        a.delivered[i].bytes - b.delivered[i].bytes};
  }
  return out;
}

NetworkSim::NetworkSim(const NetConfig& cfg, int n_robots)
    : cfg_(cfg), mailboxes_(n_robots), rng_(cfg.seed ^ 0x6a09e667f3bcc909ULL) {}

void NetworkSim::send(Message msg, double now) {
  msg.sent_at = now;
  KindTotals& totals = account_.sent[static_cast<int>(msg.kind())];
  ++totals.messages;
  totals.bytes += static_cast<std::int64_t>(msg.size_bytes());

  Pending p;
  p.ready_at = now + cfg_.latency;
  p.expires_at = now + cfg_.latency + cfg_.ttl;
  if (cfg_.drop_probability > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    p.doomed = u01(rng_) < cfg_.drop_probability;
  }
  p.msg = std::move(msg);
  queue_.push_back(std::move(p));
}

void NetworkSim::step(double now, const std::vector<Eigen::Vector2d>& positions) {
  const auto in_range = [&](RobotId a, RobotId b) {
    if (a < 0 || b < 0 || a >= static_cast<int>(positions.size()) ||
        b >= static_cast<int>(positions.size())) {
      return false;
    }
    return (positions[a] - positions[b]).norm() <= cfg_.comm_range;
  };

  std::deque<Pending> keep;
  while (!queue_.empty()) {
    Pending p = std::move(queue_.front());
    queue_.pop_front();
    if (p.doomed || now > p.expires_at) continue;
    if (now + 1e-12 < p.ready_at || !in_range(p.msg.sender, p.msg.receiver)) {
      keep.push_back(std::move(p));
      continue;
    }
    KindTotals& totals = account_.delivered[static_cast<int>(p.msg.kind())];
    ++totals.messages;
    totals.bytes += static_cast<std::int64_t>(p.msg.size_bytes());
    mailboxes_[p.msg.receiver].push_back(std::move(p.msg));
  }
  queue_ = std::move(keep);
}

std::vector<Message> NetworkSim::collect(RobotId robot) {
  auto out = std::move(mailboxes_[robot]);
  mailboxes_[robot].clear();
  return out;
}

std::string NetworkSim::format_report() const {
  std::ostringstream out;
  out << "kind             sent_msgs     sent_bytes  delivered_msgs  delivered_bytes\n";
  for (int i = 0; i < kMsgKindCount; ++i) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %11lld %14lld %15lld %16lld\n",
                  msg_kind_name(static_cast<MsgKind>(i)),
                  static_cast<long long>(account_.sent[i].messages),
                  static_cast<long long>(account_.sent[i].bytes),
                  static_cast<long long>(account_.delivered[i].messages),
                  static_cast<long long>(account_.delivered[i].bytes));
    out << line;
  }
  out << "total sent bytes: " << account_.total_sent_bytes() << "\n";
  return out.str();
}

std::string NetworkSim::format_report_csv() const {
  std::ostringstream out;
  out << "kind,sent_messages,sent_bytes,delivered_messages,delivered_bytes\n";
  for (int i = 0; i < kMsgKindCount; ++i) {
    out << msg_kind_name(static_cast<MsgKind>(i)) << ',' << account_.sent[i].messages << ','
        << account_.sent[i].bytes << ',' << account_.delivered[i].messages << ','
        << account_.delivered[i].bytes << '\n';
  }
  return out.str();
}

}  // namespace rslam
