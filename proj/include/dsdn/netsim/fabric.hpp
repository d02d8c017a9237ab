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

// The simulated data plane. Every switch and host is a sequential actor;
// links are mailbox posts, optionally delayed by a fixed per-hop latency.

#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "dsdn/netsim/host_proto.hpp"
#include "dsdn/netsim/network_spec.hpp"
#include "dsdn/netsim/switch_state.hpp"
#include "dsdn/southbound.hpp"
#include "dsdn/util/actor.hpp"
#include "dsdn/wire/codec.hpp"

namespace dsdn::netsim {

class Fabric;

struct FabricOptions {
  std::chrono::microseconds link_latency{0};
  /// Keep every accepted frame in each host's inbox.
  bool record_host_frames = false;
};

class SimSwitch final : public SwitchChannel {
 public:
  SimSwitch(const SwitchSpec& spec, Fabric& fabric)
      : fabric_(fabric), actor_("switch-" + std::to_string(spec.dpid)) {
    state_.dpid = spec.dpid;
    for (PortNo p = 1; p <= spec.port_count; ++p) state_.ports.emplace(p, true);
  }

  Dpid dpid() const { return state_.dpid; }

  std::vector<PortNo> ports() const {
    std::vector<PortNo> out;
    for (const auto& [p, up] : state_.ports) out.push_back(p);
    return out;
  }

  void set_listener(SouthboundListener* listener) { listener_.store(listener); }

  /// Data-plane ingress.
  void receive(PortNo in_port, Frame frame, TimePoint deliver_at) {
    auto task = [this, in_port, frame = std::move(frame)]() mutable {
      handle_frame(in_port, std::move(frame));
    };
    if (deliver_at <= Clock::now()) {
      actor_.post(std::move(task));
    } else {
      actor_.post_at(deliver_at, std::move(task));
    }
  }

  void set_port_state(PortNo port, bool up) {
    actor_.post([this, port, up] {
      auto it = state_.ports.find(port);
      if (it == state_.ports.end() || it->second == up) return;
      it->second = up;
      notify(PortStatus{state_.dpid, port, up});
    });
  }

  void send(std::vector<uint8_t> sb_message) override {
    actor_.post([this, bytes = std::move(sb_message)] {
      auto msg = wire::decode_sb(bytes);
      if (auto* out = std::get_if<PacketOut>(&msg)) {
        std::vector<SwitchEffect> effects;
        emit(state_, out->out_port, out->frame, std::nullopt, effects);
        process(std::move(effects));
      }
    });
  }

  ControlReply request(std::vector<uint8_t> sb_message) override {
    return actor_.call([this, &sb_message] {
      ControlReply reply;
      auto msg = wire::decode_sb(sb_message);
      auto* mod = std::get_if<FlowMod>(&msg);
      if (!mod) {
        reply.error = "request carries no FlowMod";
        return reply;
      }
      auto now = Clock::now();
      process(as_effects(expire_flows(state_, now)));
      switch (mod->op) {
        case FlowModOp::Add: {
          FlowRule rule = mod->rule;
          rule.installed_at = now;
          rule.packet_count = 0;
          rule.byte_count = 0;
          reply.replaced = add_rule(state_, rule);
          reply.rule = rule;
          reply.ok = true;
          break;
        }
        case FlowModOp::Modify:
          reply.rule = modify_rule(state_, mod->rule);
          reply.ok = reply.rule.has_value();
          break;
        case FlowModOp::Remove:
          reply.rule = remove_rule(state_, mod->rule.rule_id);
          reply.ok = reply.rule.has_value();
          break;
      }
      if (!reply.ok) reply.error = "no rule " + std::to_string(mod->rule.rule_id);
      schedule_sweep();
      return reply;
    });
  }

  std::vector<FlowRule> dump_flows() override {
    return actor_.call([this] {
      process(as_effects(expire_flows(state_, Clock::now())));
      return state_.table;
    });
  }

  uint64_t stale_output_drops() {
    return actor_.call([this] { return state_.stale_output_drops; });
  }

  bool idle() const { return actor_.idle(); }
  void stop() { actor_.stop(); }

 private:
  static std::vector<SwitchEffect> as_effects(std::vector<FlowRule> removed) {
    std::vector<SwitchEffect> out;
    for (auto& r : removed) out.push_back(RuleExpired{std::move(r)});
    return out;
  }

  void notify(const SbMessage& msg) {
    if (auto* l = listener_.load()) l->on_switch_message(state_.dpid, wire::encode_sb(msg));
  }

  void handle_frame(PortNo in_port, Frame frame) {
    process(switch_rx(state_, in_port, frame, Clock::now()));
  }

  void process(std::vector<SwitchEffect> effects);

  void schedule_sweep() {
    auto next = next_expiry(state_);
    if (!next || (sweep_at_ && *sweep_at_ <= *next)) return;
    sweep_at_ = *next;
    actor_.post_at(*next, [this] {
      sweep_at_.reset();
      process(as_effects(expire_flows(state_, Clock::now())));
      schedule_sweep();
    });
  }

  SwitchState state_;
  Fabric& fabric_;
  std::atomic<SouthboundListener*> listener_{nullptr};
  std::optional<TimePoint> sweep_at_;
  ActorThread actor_;
};

struct PingOptions {
  uint32_t count = 1;
  std::chrono::microseconds interval{10'000};
  std::chrono::microseconds timeout{5'000'000};
  std::size_t payload_bytes = kDefaultPingPayload;
};

struct PingSample {
  uint32_t seq = 0;
  uint64_t rtt_micros = 0;
  bool lost = false;
};

struct StreamOptions {
  std::chrono::microseconds duration{1'000'000};
  int n_conns = 1;
  std::size_t segment_bytes = kDefaultSegmentBytes;
  std::chrono::microseconds retransmit_after{1'000'000};
};

struct ConnReport {
  uint16_t conn = 0;
  uint64_t acked_bytes = 0;
  uint64_t acked_segments = 0;
  uint64_t retransmits = 0;
  double goodput_bytes_per_s = 0;
};

struct StreamReport {
  std::vector<ConnReport> conns;
  double duration_s = 0;
  double aggregate_bytes_per_s = 0;
};

class SimHost {
 public:
  SimHost(HostSpec spec, Fabric& fabric, bool record)
      : spec_(std::move(spec)), fabric_(fabric), record_(record),
        actor_("host-" + std::to_string(spec_.host_id)) {}

  const HostSpec& spec() const { return spec_; }
  MacAddr mac() const { return spec_.mac; }

  /// Called by the attached switch.
  void deliver(Frame frame, TimePoint deliver_at) {
    auto task = [this, frame = std::move(frame)]() mutable { on_frame(std::move(frame)); };
    if (deliver_at <= Clock::now()) {
      actor_.post(std::move(task));
    } else {
      actor_.post_at(deliver_at, std::move(task));
    }
  }

  void send(Frame frame) {
    actor_.post([this, frame = std::move(frame)]() mutable { transmit(std::move(frame)); });
  }

  void send_raw(MacAddr dst, std::span<const uint8_t> bytes) { send(make_raw(dst, spec_.mac, bytes)); }

  /// Gratuitous address announcement (broadcast).
  void announce() {
    send(make_arp(spec_.mac, {ArpOp::Announce, spec_.mac, next_nonce_++}));
  }

  /// Broadcasts resolution requests until `dst` announces itself.
  bool resolve(MacAddr dst, std::chrono::microseconds timeout = std::chrono::seconds(1),
               int attempts = 3) {
    for (int i = 0; i < attempts; ++i) {
      if (resolved(dst)) return true;
      send(make_arp(spec_.mac, {ArpOp::Request, dst, next_nonce_++}));
      std::unique_lock lock(mu_);
      if (cv_.wait_for(lock, timeout, [&] { return resolved_.contains(dst); })) return true;
    }
    return false;
  }

  bool resolved(MacAddr dst) const {
    std::lock_guard lock(mu_);
    return resolved_.contains(dst);
  }

  /// Sends `count` echo requests, one at a time; each waits for its reply
  /// up to `timeout`, then `interval` elapses before the next.
  std::vector<PingSample> ping(MacAddr dst, const PingOptions& opts) {
    if (dst == spec_.mac) throw std::invalid_argument("self ping");
    if (opts.count < 1) throw std::invalid_argument("ping count must be >= 1");
    resolve(dst);
    std::vector<PingSample> samples;
    samples.reserve(opts.count);
    for (uint32_t i = 0; i < opts.count; ++i) {
      uint32_t seq = next_ping_seq_++;
      actor_.post([this, dst, seq, bytes = opts.payload_bytes] {
        transmit(make_echo(dst, spec_.mac, AppType::EchoRequest, {seq, now_micros()}, bytes));
      });
      PingSample sample{seq, 0, true};
      {
        std::unique_lock lock(mu_);
        if (cv_.wait_for(lock, opts.timeout, [&] { return ping_rtts_.contains(seq); })) {
          sample.rtt_micros = ping_rtts_[seq];
          sample.lost = false;
          ping_rtts_.erase(seq);
        }
      }
      samples.push_back(sample);
      if (i + 1 < opts.count && opts.interval.count() > 0) std::this_thread::sleep_for(opts.interval);
    }
    return samples;
  }

  /// Runs `n_conns` stop-and-wait connections toward `dst` for the given
  /// duration; goodput counts acknowledged segment bytes.
  StreamReport stream(MacAddr dst, const StreamOptions& opts) {
    if (opts.n_conns < 1) throw std::invalid_argument("stream needs at least one connection");
    if (opts.duration.count() <= 0) throw std::invalid_argument("stream duration must be positive");
    if (dst == spec_.mac) throw std::invalid_argument("stream to self");
    if (opts.segment_bytes < 7 || opts.segment_bytes > kMaxFramePayload) {
      throw std::invalid_argument("segment size out of range");
    }
    resolve(dst);
    auto started = actor_.call([&] {
      stream_ = StreamState{};
      stream_.active = true;
      stream_.dst = dst;
      stream_.opts = opts;
      stream_.started = Clock::now();
      stream_.conns.resize(static_cast<std::size_t>(opts.n_conns));
      for (std::size_t c = 0; c < stream_.conns.size(); ++c) send_segment(static_cast<uint16_t>(c));
      schedule_stream_tick();
      return stream_.started;
    });
    std::this_thread::sleep_until(started + opts.duration);
    return actor_.call([&] {
      stream_.active = false;
      StreamReport report;
      report.duration_s = std::chrono::duration<double>(Clock::now() - stream_.started).count();
      for (std::size_t c = 0; c < stream_.conns.size(); ++c) {
        const auto& st = stream_.conns[c];
        ConnReport row;
        row.conn = static_cast<uint16_t>(c);
        row.acked_bytes = st.acked_bytes;
        row.acked_segments = st.acked_segments;
        row.retransmits = st.retransmits;
        row.goodput_bytes_per_s = static_cast<double>(st.acked_bytes) / report.duration_s;
        report.aggregate_bytes_per_s += row.goodput_bytes_per_s;
        report.conns.push_back(row);
      }
      return report;
    });
  }

  std::vector<Frame> inbox() const {
    std::lock_guard lock(mu_);
    return inbox_;
  }

  uint64_t received_count() const {
    std::lock_guard lock(mu_);
    return received_;
  }

  /// Frames addressed to some other host.
  uint64_t misdelivered_count() const {
    std::lock_guard lock(mu_);
    return misdelivered_;
  }

  bool idle() const { return actor_.idle(); }
  void stop() { actor_.stop(); }

 private:
  struct ConnState {
    uint32_t seq = 0;
    TimePoint sent_at{};
    uint64_t acked_bytes = 0;
    uint64_t acked_segments = 0;
    uint64_t retransmits = 0;
  };
  struct StreamState {
    bool active = false;
    MacAddr dst;
    StreamOptions opts;
    TimePoint started{};
    std::vector<ConnState> conns;
  };

  void transmit(Frame frame);

  void send_segment(uint16_t conn) {
    auto& st = stream_.conns[conn];
    st.sent_at = Clock::now();
    transmit(make_segment(stream_.dst, spec_.mac, AppType::Segment, {conn, st.seq},
                          stream_.opts.segment_bytes));
  }

  void schedule_stream_tick() {
    actor_.post_at(Clock::now() + std::chrono::milliseconds(100), [this] {
      if (!stream_.active) return;
      auto now = Clock::now();
      for (std::size_t c = 0; c < stream_.conns.size(); ++c) {
        auto& st = stream_.conns[c];
        if (now - st.sent_at >= stream_.opts.retransmit_after) {
          ++st.retransmits;
          send_segment(static_cast<uint16_t>(c));
        }
      }
      schedule_stream_tick();
    });
  }

  void on_frame(Frame frame) {
    if (frame.src == spec_.mac) return;  // our own flood coming back
    bool for_us = frame.dst == spec_.mac || frame.dst.is_broadcast();
    {
      std::lock_guard lock(mu_);
      if (!for_us) {
        ++misdelivered_;
        return;
      }
      ++received_;
      if (record_) inbox_.push_back(frame);
    }

    if (auto arp = parse_arp(frame)) {
      {
        std::lock_guard lock(mu_);
        resolved_.insert(frame.src);
      }
      cv_.notify_all();
      if (arp->op == ArpOp::Request && arp->target == spec_.mac &&
          answered_.insert({frame.src, arp->nonce}).second) {
        transmit(make_arp(spec_.mac, {ArpOp::Announce, spec_.mac, next_nonce_++}));
      }
      return;
    }

    auto type = app_type(frame);
    if (!type) return;
    switch (*type) {
      case AppType::EchoRequest: {
        Frame reply{frame.src, spec_.mac, kEthData, frame.payload};
        reply.payload[0] = static_cast<uint8_t>(AppType::EchoReply);
        transmit(std::move(reply));
        break;
      }
      case AppType::EchoReply: {
        if (auto body = parse_echo(frame)) {
          auto rtt = now_micros() - body->send_ts_micros;
          {
            std::lock_guard lock(mu_);
            ping_rtts_.emplace(body->seq, rtt);
          }
          cv_.notify_all();
        }
        break;
      }
      case AppType::Segment: {
        if (auto body = parse_segment(frame)) {
          transmit(make_segment(frame.src, spec_.mac, AppType::Ack, *body, 7));
        }
        break;
      }
      case AppType::Ack: {
        auto body = parse_segment(frame);
        if (!body || !stream_.active || frame.src != stream_.dst ||
            body->conn >= stream_.conns.size()) {
          break;
        }
        auto& st = stream_.conns[body->conn];
        if (body->seq != st.seq) break;  // duplicate ack
        st.acked_bytes += stream_.opts.segment_bytes;
        ++st.acked_segments;
        ++st.seq;
        send_segment(body->conn);
        break;
      }
      case AppType::Raw: break;
    }
  }

  HostSpec spec_;
  Fabric& fabric_;
  bool record_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Frame> inbox_;
  uint64_t received_ = 0;
  uint64_t misdelivered_ = 0;
  std::set<MacAddr> resolved_;
  std::map<uint32_t, uint64_t> ping_rtts_;

  std::atomic<uint32_t> next_nonce_{1};
  std::atomic<uint32_t> next_ping_seq_{0};

  // Actor-only state.
  std::set<std::pair<MacAddr, uint32_t>> answered_;
  StreamState stream_;

  ActorThread actor_;
};

class Fabric {
 public:
  explicit Fabric(NetworkSpec spec, FabricOptions opts = {})
      : spec_(std::move(spec)), opts_(opts) {
    spec_.validate();
    for (const auto& s : spec_.switches) {
      switches_.emplace(s.dpid, std::make_shared<SimSwitch>(s, *this));
    }
    for (const auto& h : spec_.hosts) {
      auto host = std::make_unique<SimHost>(h, *this, opts_.record_host_frames);
      peers_[h.attachment] = Peer{nullptr, host.get(), 0};
      hosts_.emplace(h.host_id, std::move(host));
    }
    for (const auto& l : spec_.links) {
      peers_[l.a] = Peer{switches_.at(l.b.dpid).get(), nullptr, l.b.port};
      peers_[l.b] = Peer{switches_.at(l.a.dpid).get(), nullptr, l.a.port};
    }
  }

  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  ~Fabric() { stop(); }

  /// Hands every switch to the controller: each sends its Hello.
  void connect(SouthboundListener& listener) {
    for (auto& [dpid, sw] : switches_) {
      sw->set_listener(&listener);
      listener.on_switch_connected(wire::encode_sb(Hello{dpid, sw->ports()}), sw);
    }
  }

  void disconnect_switch(SouthboundListener& listener, Dpid dpid) {
    auto& sw = switch_at(dpid);
    sw.set_listener(nullptr);
    listener.on_switch_disconnected(dpid);
  }

  const NetworkSpec& spec() const { return spec_; }

  SimSwitch& switch_at(Dpid dpid) {
    auto it = switches_.find(dpid);
    if (it == switches_.end()) throw std::out_of_range("no switch " + std::to_string(dpid));
    return *it->second;
  }

  SimHost& host(uint32_t host_id) {
    auto it = hosts_.find(host_id);
    if (it == hosts_.end()) throw std::out_of_range("no host " + std::to_string(host_id));
    return *it->second;
  }

  std::vector<SimHost*> hosts() {
    std::vector<SimHost*> out;
    for (auto& [id, h] : hosts_) out.push_back(h.get());
    return out;
  }

  std::vector<FlowRule> flow_table(Dpid dpid) { return switch_at(dpid).dump_flows(); }

  /// Takes a link up or down. For switch-to-switch links both ends change.
  void set_link_state(PortRef end, bool up) {
    auto it = peers_.find(end);
    if (it == peers_.end()) throw std::out_of_range("port is not linked");
    switch_at(end.dpid).set_port_state(end.port, up);
    if (it->second.sw) it->second.sw->set_port_state(it->second.port, up);
  }

  bool idle() const {
    for (const auto& [d, sw] : switches_) {
      if (!sw->idle()) return false;
    }
    for (const auto& [id, h] : hosts_) {
      if (!h->idle()) return false;
    }
    return true;
  }

  void stop() {
    for (auto& [d, sw] : switches_) sw->stop();
    for (auto& [id, h] : hosts_) h->stop();
  }

  /// Puts `frame` on the wire leaving switch port `from`.
  void transmit(PortRef from, Frame frame) {
    auto it = peers_.find(from);
    if (it == peers_.end()) return;  // unwired port
    auto at = Clock::now() + opts_.link_latency;
    if (it->second.sw) {
      it->second.sw->receive(it->second.port, std::move(frame), at);
    } else {
      it->second.host->deliver(std::move(frame), at);
    }
  }

  void transmit_from_host(const HostSpec& host, Frame frame) {
    switch_at(host.attachment.dpid)
        .receive(host.attachment.port, std::move(frame), Clock::now() + opts_.link_latency);
  }

 private:
  struct Peer {
    SimSwitch* sw = nullptr;
    SimHost* host = nullptr;
    PortNo port = 0;
  };

  NetworkSpec spec_;
  FabricOptions opts_;
  std::map<Dpid, std::shared_ptr<SimSwitch>> switches_;
  std::map<uint32_t, std::unique_ptr<SimHost>> hosts_;
  std::map<PortRef, Peer> peers_;
};

inline void SimSwitch::process(std::vector<SwitchEffect> effects) {
  for (auto& effect : effects) {
    if (auto* tx = std::get_if<Transmit>(&effect)) {
      fabric_.transmit({state_.dpid, tx->port}, std::move(tx->frame));
    } else if (auto* up = std::get_if<ToController>(&effect)) {
      notify(PacketIn{state_.dpid, up->in_port, std::move(up->frame)});
    } else if (auto* gone = std::get_if<RuleExpired>(&effect)) {
      notify(FlowMod{state_.dpid, FlowModOp::Remove, std::move(gone->rule)});
    }
  }
}

inline void SimHost::transmit(Frame frame) { fabric_.transmit_from_host(spec_, std::move(frame)); }

}  // namespace dsdn::netsim
