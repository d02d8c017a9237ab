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

// Random value generators for property tests.

#pragma once

#include <random>

#include "dsdn/wire/types.hpp"

namespace dsdn::testing {

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}

  template <class T>
  T uint(T lo, T hi) {
    return static_cast<T>(std::uniform_int_distribution<uint64_t>(lo, hi)(rng_));
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& rng() { return rng_; }

  MacAddr mac() {
    MacAddr m;
    for (auto& o : m.octets) o = uint<uint8_t>(0, 255);
    return m;
  }

  /// A MAC from a small pool, so that matches actually hit.
  MacAddr pooled_mac(uint32_t pool) { return host_mac(uint<uint32_t>(1, pool)); }

  uint16_t ethertype() {
    static constexpr uint16_t kTypes[] = {kEthDiscovery, kEthArp, kEthData};
    return kTypes[uint<int>(0, 2)];
  }

  Frame frame(std::size_t max_payload = kMaxFramePayload) {
    Frame f;
    f.dst = coin(0.1) ? MacAddr::broadcast() : mac();
    f.src = mac();
    f.ethertype = ethertype();
    f.payload.resize(uint<std::size_t>(0, max_payload));
    for (auto& b : f.payload) b = uint<uint8_t>(0, 255);
    return f;
  }

  Match match() {
    Match m;
    if (coin()) m.in_port = uint<PortNo>(0, 0xFFFF);
    if (coin()) m.eth_src = mac();
    if (coin()) m.eth_dst = mac();
    if (coin()) m.ethertype = ethertype();
    return m;
  }

  Action action() {
    switch (uint<int>(0, 3)) {
      case 0: return Action::output(uint<PortNo>(1, 64));
      case 1: return Action::flood();
      case 2: return Action::drop();
      default: return Action::controller();
    }
  }

  FlowRule rule() {
    FlowRule r;
    r.rule_id = uint<uint64_t>(0, UINT64_MAX);
    r.priority = uint<uint16_t>(0, 0xFFFF);
    r.match = match();
    auto n = uint<int>(0, 4);
    for (int i = 0; i < n; ++i) r.actions.push_back(action());
    r.hard_timeout_s = coin() ? 0 : uint<uint32_t>(0, UINT32_MAX);
    r.packet_count = uint<uint64_t>(0, UINT64_MAX);
    r.byte_count = uint<uint64_t>(0, UINT64_MAX);
    return r;
  }

  Event event() {
    Event e;
    e.seq = uint<uint64_t>(0, UINT64_MAX);
    e.ts_micros = uint<uint64_t>(0, UINT64_MAX);
    switch (uint<int>(0, 4)) {
      case 0: e.body = PacketException{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), frame()}; break;
      case 1:
        e.body = TopologyLink{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF),
                              uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), coin()};
        break;
      case 2: e.body = TopologyDevice{uint<Dpid>(0, UINT64_MAX), coin()}; break;
      case 3: e.body = TopologyPort{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), coin()}; break;
      default:
        e.body = FlowRuleEvent{static_cast<FlowRuleOp>(uint<int>(1, 3)), uint<Dpid>(0, UINT64_MAX),
                               rule()};
        break;
    }
    return e;
  }

  SbMessage sb() {
    switch (uint<int>(0, 4)) {
      case 0: {
        Hello h{uint<Dpid>(0, UINT64_MAX), {}};
        auto n = uint<int>(0, 64);
        for (int i = 0; i < n; ++i) h.ports.push_back(uint<PortNo>(0, 0xFFFF));
        return h;
      }
      case 1: return PacketIn{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), frame()};
      case 2: return PacketOut{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), frame()};
      case 3:
        return FlowMod{uint<Dpid>(0, UINT64_MAX), static_cast<FlowModOp>(uint<int>(1, 3)), rule()};
      default: return PortStatus{uint<Dpid>(0, UINT64_MAX), uint<PortNo>(0, 0xFFFF), coin()};
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace dsdn::testing
