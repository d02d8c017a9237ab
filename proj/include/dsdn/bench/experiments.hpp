// Copyright 2026 The dsdn Authors.
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

// Response-time and throughput experiments across distribution modes.

#pragma once

#include <chrono>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dsdn/bench/stats.hpp"
#include "dsdn/netsim/host_proto.hpp"
#include "dsdn/services/testbed.hpp"

namespace dsdn::bench {

using core::Mode;

inline constexpr double kMaxLossFraction = 0.01;
inline constexpr double kSignificance = 0.01;
inline constexpr std::size_t kSignBlock = 10;
/// Below this broker poll interval the broker may legitimately keep up with
/// push delivery, so an ordering result is flagged rather than trusted.
inline constexpr std::chrono::microseconds kOrderingPollFloor{100};

struct RtConfig {
  std::string topology = "linear:5";
  uint32_t count = 500;
  std::vector<Mode> modes{Mode::Internal, Mode::P2p, Mode::Broker};
  std::chrono::microseconds link_latency{0};
  std::chrono::microseconds timeout{5'000'000};
  std::chrono::microseconds interval{10'000};
  std::size_t payload_bytes = netsim::kDefaultPingPayload;
  uint32_t warmup = 10;
  std::chrono::microseconds broker_poll{1000};
  services::Transport transport = services::Transport::InProc;

  void validate() const {
    if (count == 0) throw std::invalid_argument("ping count must be at least 1");
    if (modes.empty()) throw std::invalid_argument("at least one mode is required");
  }
};

struct RtModeResult {
  Mode mode = Mode::Internal;
  std::vector<netsim::PingSample> samples;
  Summary summary;
  std::size_t hops = 0;  // switches on the measured path
  /// Measured pings whose packet events did not number 2 x hops.
  std::size_t event_count_mismatches = 0;
  std::vector<Event> event_log;
  bool valid = false;
  std::vector<std::string> problems;
};

struct RtComparison {
  Mode faster = Mode::Internal;
  Mode slower = Mode::Internal;
  double mean_gap = 0;    // slower minus faster, micros
  double median_gap = 0;  // slower minus faster, micros
  SignTest sign;
  bool significant = false;
  bool flagged = false;  // broker poll below the floor
  bool holds() const { return mean_gap > 0 && median_gap > 0 && significant; }
};

struct RtResult {
  RtConfig config;
  std::vector<RtModeResult> modes;
  std::vector<RtComparison> comparisons;  // consecutive pairs of config.modes
  bool valid() const {
    for (const auto& m : modes) {
      if (!m.valid) return false;
    }
    return !modes.empty();
  }
};

/// The two hosts furthest apart by switch hops; ties go to the lowest ids.
inline std::pair<uint32_t, uint32_t> far_hosts(const netsim::NetworkSpec& spec) {
  if (spec.hosts.size() < 2) throw std::invalid_argument("topology needs at least two hosts");
  std::pair<uint32_t, uint32_t> best{spec.hosts[0].host_id, spec.hosts[1].host_id};
  std::size_t best_hops = 0;
  for (std::size_t i = 0; i < spec.hosts.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.hosts.size(); ++j) {
      auto h = spec.switch_hops(spec.hosts[i].attachment.dpid, spec.hosts[j].attachment.dpid);
      if (h > best_hops) {
        best_hops = h;
        best = {spec.hosts[i].host_id, spec.hosts[j].host_id};
      }
    }
  }
  return best;
}

/// Packet events per echo (request and reply counted together), keyed by
/// echo sequence number.
inline std::map<uint32_t, std::size_t> echo_events(const std::vector<Event>& log) {
  std::map<uint32_t, std::size_t> n;
  for (const auto& e : log) {
    auto* pe = e.as<PacketException>();
    if (!pe || pe->frame.ethertype != kEthData) continue;
    auto t = netsim::app_type(pe->frame);
    if (t != netsim::AppType::EchoRequest && t != netsim::AppType::EchoReply) continue;
    if (auto body = netsim::parse_echo(pe->frame)) ++n[body->seq];
  }
  return n;
}

inline RtModeResult run_rt_mode(const RtConfig& cfg, Mode mode) {
  auto spec = netsim::build_topology(cfg.topology);
  auto [a, b] = far_hosts(spec);
  services::TestbedConfig tc;
  tc.mode = mode;
  tc.network = spec;
  tc.fabric.link_latency = cfg.link_latency;
  tc.fwd.install_rules = false;
  tc.transport = cfg.transport;
  tc.broker_poll = cfg.broker_poll;
  services::Testbed tb(tc);
  tb.warm_up();

  RtModeResult r;
  r.mode = mode;
  r.hops = spec.switch_hops(spec.host(a).attachment.dpid, spec.host(b).attachment.dpid);
  auto& src = tb.fabric().host(a);
  auto dst = tb.fabric().host(b).mac();

  netsim::PingOptions po;
  po.interval = cfg.interval;
  po.timeout = cfg.timeout;
  po.payload_bytes = cfg.payload_bytes;
  if (cfg.warmup > 0) {
    po.count = cfg.warmup;
    src.ping(dst, po);
  }
  tb.settle();
  auto first_seq = tb.core().event_log_size();
  po.count = cfg.count;
  r.samples = src.ping(dst, po);
  tb.settle();
  r.event_log = tb.core().event_log();
  tb.stop();

  std::vector<Event> measured;
  for (const auto& e : r.event_log) {
    if (e.seq > first_seq) measured.push_back(e);
  }
  auto per_echo = echo_events(measured);
  std::vector<double> rtts;
  std::size_t lost = 0;
  for (const auto& s : r.samples) {
    if (s.lost) {
      ++lost;
      continue;
    }
    rtts.push_back(static_cast<double>(s.rtt_micros));
    auto it = per_echo.find(s.seq);
    if (it == per_echo.end() || it->second != 2 * r.hops) ++r.event_count_mismatches;
  }
  r.summary = summarize(std::move(rtts), lost);

  r.valid = true;
  if (static_cast<double>(lost) > kMaxLossFraction * static_cast<double>(cfg.count)) {
    r.valid = false;
    r.problems.push_back(std::to_string(lost) + " of " + std::to_string(cfg.count) + " pings lost");
  }
  if (r.event_count_mismatches > 0) {
    r.valid = false;
    r.problems.push_back(std::to_string(r.event_count_mismatches) + " pings without " +
                         std::to_string(2 * r.hops) + " packet events");
  }
  return r;
}

inline RtComparison compare(const RtConfig& cfg, const RtModeResult& fast, const RtModeResult& slow) {
  RtComparison c;
  c.faster = fast.mode;
  c.slower = slow.mode;
  c.mean_gap = slow.summary.mean - fast.summary.mean;
  c.median_gap = slow.summary.median - fast.summary.median;
  // pair by run index, keeping runs where neither side was lost
  std::vector<double> xa, xb;
  auto n = std::min(fast.samples.size(), slow.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (fast.samples[i].lost || slow.samples[i].lost) continue;
    xa.push_back(static_cast<double>(fast.samples[i].rtt_micros));
    xb.push_back(static_cast<double>(slow.samples[i].rtt_micros));
  }
  c.sign = paired_block_sign_test(xa, xb, kSignBlock);
  c.significant = c.sign.blocks > 0 && c.sign.p_value < kSignificance;
  bool broker_involved = fast.mode == Mode::Broker || slow.mode == Mode::Broker;
  c.flagged = broker_involved && cfg.broker_poll < kOrderingPollFloor;
  return c;
}

inline RtResult run_response_time(const RtConfig& cfg) {
  cfg.validate();
  RtResult res;
  res.config = cfg;
  for (auto m : cfg.modes) res.modes.push_back(run_rt_mode(cfg, m));
  for (std::size_t i = 0; i + 1 < res.modes.size(); ++i) {
    res.comparisons.push_back(compare(cfg, res.modes[i], res.modes[i + 1]));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Throughput

struct TpConfig {
  std::string topology = "linear:5";
  std::chrono::seconds duration{15};
  std::vector<int> conns{1, 2, 4, 8};
  std::vector<Mode> modes{Mode::Internal, Mode::P2p, Mode::Broker};
  services::InstallChannel channel = services::InstallChannel::Direct;
  uint32_t hard_timeout_s = 10;
  std::chrono::microseconds link_latency{0};
  std::chrono::microseconds broker_poll{1000};
  std::size_t segment_bytes = netsim::kDefaultSegmentBytes;
  services::Transport transport = services::Transport::InProc;

  void validate() const {
    if (duration.count() <= 0) throw std::invalid_argument("duration must be positive");
    if (conns.empty() || modes.empty()) throw std::invalid_argument("need at least one mode and connection count");
    for (int n : conns) {
      if (n < 1) throw std::invalid_argument("connection counts must be at least 1");
    }
  }

  /// Warning text when the run is too short for rules to churn.
  std::string churn_warning() const {
    if (hard_timeout_s == 0 || duration.count() > 2 * static_cast<long>(hard_timeout_s)) return "";
    return "duration " + std::to_string(duration.count()) + " s is not more than twice the " +
           std::to_string(hard_timeout_s) + " s hard timeout; few expiry cycles will occur";
  }
};

struct TpRunResult {
  Mode mode = Mode::Internal;
  services::InstallChannel channel = services::InstallChannel::Direct;
  int n_conns = 1;
  netsim::StreamReport report;
  /// Fewest removals seen by any rule key (dpid, eth_dst) on the stream's
  /// paths. Removals come from expiry, or from a reinstall replacing a rule
  /// that had not yet expired.
  std::size_t expiry_cycles = 0;
  std::size_t removed_events = 0;
  std::size_t added_events = 0;
  std::vector<Event> event_log;
  bool valid = false;
  std::vector<std::string> problems;
};

struct TpResult {
  TpConfig config;
  std::vector<TpRunResult> runs;
  bool valid() const {
    for (const auto& r : runs) {
      if (!r.valid) return false;
    }
    return !runs.empty();
  }
  const TpRunResult* find(Mode m, int n) const {
    for (const auto& r : runs) {
      if (r.mode == m && r.n_conns == n) return &r;
    }
    return nullptr;
  }
};

inline TpRunResult run_tp_once(const TpConfig& cfg, Mode mode, int n_conns) {
  auto spec = netsim::build_topology(cfg.topology);
  auto [a, b] = far_hosts(spec);
  services::TestbedConfig tc;
  tc.mode = mode;
  tc.network = spec;
  tc.fabric.link_latency = cfg.link_latency;
  tc.fwd.install_rules = true;
  tc.fwd.channel = cfg.channel;
  tc.fwd.hard_timeout_s = cfg.hard_timeout_s;
  tc.transport = cfg.transport;
  tc.broker_poll = cfg.broker_poll;
  services::Testbed tb(tc);
  tb.warm_up();

  TpRunResult r;
  r.mode = mode;
  r.channel = cfg.channel;
  r.n_conns = n_conns;
  auto& src = tb.fabric().host(a);
  auto& dst = tb.fabric().host(b);
  netsim::StreamOptions so;
  so.duration = cfg.duration;
  so.n_conns = n_conns;
  so.segment_bytes = cfg.segment_bytes;
  r.report = src.stream(dst.mac(), so);
  tb.settle();
  r.event_log = tb.core().event_log();
  tb.stop();

  std::map<std::pair<Dpid, MacAddr>, std::size_t> expiries;
  for (const auto& e : r.event_log) {
    auto* fr = e.as<FlowRuleEvent>();
    if (!fr || !fr->rule.match.eth_dst) continue;
    auto key = std::make_pair(fr->dpid, *fr->rule.match.eth_dst);
    if (fr->op == FlowRuleOp::Added) {
      ++r.added_events;
      expiries.try_emplace(key, 0);
    } else if (fr->op == FlowRuleOp::Removed) {
      ++r.removed_events;
      ++expiries[key];
    }
  }
  if (!expiries.empty()) {
    r.expiry_cycles = expiries.begin()->second;
    for (const auto& [k, n] : expiries) r.expiry_cycles = std::min(r.expiry_cycles, n);
  }

  uint64_t bytes = 0;
  for (const auto& c : r.report.conns) bytes += c.acked_bytes;
  r.valid = bytes > 0;
  if (!r.valid) r.problems.push_back("no bytes delivered");
  return r;
}

inline TpResult run_throughput(const TpConfig& cfg) {
  cfg.validate();
  TpResult res;
  res.config = cfg;
  for (auto m : cfg.modes) {
    for (int n : cfg.conns) res.runs.push_back(run_tp_once(cfg, m, n));
  }
  return res;
}

}  // namespace dsdn::bench
