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

#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dsdn {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;

/// Microseconds on the monotonic clock; the timestamp unit used on the wire.
inline uint64_t now_micros() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now().time_since_epoch())
          .count());
}

using Dpid = uint64_t;
using PortNo = uint16_t;
using RuleId = uint64_t;

inline constexpr PortNo kFloodPort = 0xFFFF;
inline constexpr PortNo kControllerPort = 0xFFFE;

inline constexpr uint16_t kEthDiscovery = 0x88CC;
inline constexpr uint16_t kEthArp = 0x0806;
inline constexpr uint16_t kEthData = 0x0800;

inline constexpr std::size_t kMaxFramePayload = 1500;

inline bool valid_ethertype(uint16_t t) {
  return t == kEthDiscovery || t == kEthArp || t == kEthData;
}

struct MacAddr {
  std::array<uint8_t, 6> octets{};

  static constexpr MacAddr broadcast() { return {{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}}; }

  bool is_broadcast() const { return *this == broadcast(); }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(17);
    for (std::size_t i = 0; i < octets.size(); ++i) {
      if (i) s.push_back(':');
      s.push_back(kHex[octets[i] >> 4]);
      s.push_back(kHex[octets[i] & 0xF]);
    }
    return s;
  }

  /// Parses "xx:xx:xx:xx:xx:xx" (hex, either case).
  static std::optional<MacAddr> parse(std::string_view text) {
    if (text.size() != 17) return std::nullopt;
    MacAddr mac;
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0 && text[i * 3 - 1] != ':') return std::nullopt;
      auto part = text.substr(i * 3, 2);
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + 2, value, 16);
      if (ec != std::errc{} || ptr != part.data() + 2) return std::nullopt;
      mac.octets[i] = static_cast<uint8_t>(value);
    }
    return mac;
  }

  friend bool operator==(const MacAddr&, const MacAddr&) = default;
  friend auto operator<=>(const MacAddr&, const MacAddr&) = default;
};

/// Host MACs are 02:00:00:00:00:NN for 1-based host index NN. Indices above
/// 255 spill into the preceding octets (big-endian).
inline MacAddr host_mac(uint32_t index) {
  return {{0x02, 0x00, static_cast<uint8_t>(index >> 24), static_cast<uint8_t>(index >> 16),
           static_cast<uint8_t>(index >> 8), static_cast<uint8_t>(index)}};
}

struct Frame {
  MacAddr dst;
  MacAddr src;
  uint16_t ethertype = kEthData;
  std::vector<uint8_t> payload;

  /// Length counted against flow-rule byte counters.
  std::size_t byte_length() const { return 14 + payload.size(); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Match {
  std::optional<PortNo> in_port;
  std::optional<MacAddr> eth_src;
  std::optional<MacAddr> eth_dst;
  std::optional<uint16_t> ethertype;

  bool matches(PortNo port, const Frame& f) const {
    if (in_port && *in_port != port) return false;
    if (eth_src && *eth_src != f.src) return false;
    if (eth_dst && *eth_dst != f.dst) return false;
    if (ethertype && *ethertype != f.ethertype) return false;
    return true;
  }

  friend bool operator==(const Match&, const Match&) = default;
  friend auto operator<=>(const Match&, const Match&) = default;
};

struct Action {
  enum class Kind : uint8_t { Output = 1, Flood = 2, Drop = 3, Controller = 4 };

  Kind kind = Kind::Drop;
  PortNo port = 0;

  static Action output(PortNo p) { return {Kind::Output, p}; }
  static Action flood() { return {Kind::Flood, kFloodPort}; }
  static Action drop() { return {Kind::Drop, 0}; }
  static Action controller() { return {Kind::Controller, kControllerPort}; }

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

inline std::string_view to_string(Action::Kind k) {
  switch (k) {
    case Action::Kind::Output: return "OUTPUT";
    case Action::Kind::Flood: return "FLOOD";
    case Action::Kind::Drop: return "DROP";
    case Action::Kind::Controller: return "CONTROLLER";
  }
  return "?";
}

struct FlowRule {
  RuleId rule_id = 0;
  uint16_t priority = 0;
  Match match;
  std::vector<Action> actions;
  uint32_t hard_timeout_s = 0;  // 0 = permanent
  TimePoint installed_at{};     // switch-local, not carried on the wire
  uint64_t packet_count = 0;
  uint64_t byte_count = 0;

  bool expired(TimePoint now) const {
    return hard_timeout_s != 0 && now - installed_at >= std::chrono::seconds(hard_timeout_s);
  }

  // installed_at is deliberately excluded: it never crosses the wire.
  friend bool operator==(const FlowRule& a, const FlowRule& b) {
    return a.rule_id == b.rule_id && a.priority == b.priority && a.match == b.match &&
           a.actions == b.actions && a.hard_timeout_s == b.hard_timeout_s &&
           a.packet_count == b.packet_count && a.byte_count == b.byte_count;
  }
};

// ---------------------------------------------------------------------------
// Network events

enum class EventKind : uint8_t { Packet = 1, Link = 2, Device = 3, Port = 4, FlowRule = 5 };

inline constexpr EventKind kAllEventKinds[] = {EventKind::Packet, EventKind::Link,
                                               EventKind::Device, EventKind::Port,
                                               EventKind::FlowRule};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Packet: return "packet";
    case EventKind::Link: return "link";
    case EventKind::Device: return "device";
    case EventKind::Port: return "port";
    case EventKind::FlowRule: return "flowrule";
  }
  return "?";
}

/// Bit used for `kind` in subscription bitmaps.
inline constexpr uint8_t kind_bit(EventKind k) {
  return static_cast<uint8_t>(1u << (static_cast<uint8_t>(k) - 1));
}

struct PacketException {
  Dpid dpid = 0;
  PortNo in_port = 0;
  Frame frame;
  friend bool operator==(const PacketException&, const PacketException&) = default;
};

struct TopologyLink {
  Dpid src_dpid = 0;
  PortNo src_port = 0;
  Dpid dst_dpid = 0;
  PortNo dst_port = 0;
  bool up = true;
  friend bool operator==(const TopologyLink&, const TopologyLink&) = default;
};

struct TopologyDevice {
  Dpid dpid = 0;
  bool up = true;
  friend bool operator==(const TopologyDevice&, const TopologyDevice&) = default;
};

struct TopologyPort {
  Dpid dpid = 0;
  PortNo port = 0;
  bool up = true;
  friend bool operator==(const TopologyPort&, const TopologyPort&) = default;
};

enum class FlowRuleOp : uint8_t { Added = 1, Removed = 2, Updated = 3 };

struct FlowRuleEvent {
  FlowRuleOp op = FlowRuleOp::Added;
  Dpid dpid = 0;
  FlowRule rule;
  friend bool operator==(const FlowRuleEvent&, const FlowRuleEvent&) = default;
};

// Alternative order fixes the wire tag: index + 1.
using EventBody =
    std::variant<PacketException, TopologyLink, TopologyDevice, TopologyPort, FlowRuleEvent>;

struct Event {
  uint64_t seq = 0;
  uint64_t ts_micros = 0;
  EventBody body;

  EventKind kind() const { return static_cast<EventKind>(body.index() + 1); }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&body);
  }

  friend bool operator==(const Event&, const Event&) = default;
};

// ---------------------------------------------------------------------------
// Southbound messages

struct Hello {
  Dpid dpid = 0;
  std::vector<PortNo> ports;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct PacketIn {
  Dpid dpid = 0;
  PortNo in_port = 0;
  Frame frame;
  friend bool operator==(const PacketIn&, const PacketIn&) = default;
};

struct PacketOut {
  Dpid dpid = 0;
  PortNo out_port = 0;  // kFloodPort floods
  Frame frame;
  friend bool operator==(const PacketOut&, const PacketOut&) = default;
};

enum class FlowModOp : uint8_t { Add = 1, Remove = 2, Modify = 3 };

/// Controller to switch: table mutation. Switch to controller: a REMOVE
/// reports a rule the switch dropped on its own (hard timeout).
struct FlowMod {
  Dpid dpid = 0;
  FlowModOp op = FlowModOp::Add;
  FlowRule rule;
  friend bool operator==(const FlowMod&, const FlowMod&) = default;
};

struct PortStatus {
  Dpid dpid = 0;
  PortNo port = 0;
  bool up = true;
  friend bool operator==(const PortStatus&, const PortStatus&) = default;
};

// Alternative order fixes the wire tag: index + 1.
using SbMessage = std::variant<Hello, PacketIn, PacketOut, FlowMod, PortStatus>;

}  // namespace dsdn
