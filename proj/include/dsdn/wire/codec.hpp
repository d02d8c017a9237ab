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

// Fixed-layout big-endian encodings for network events and southbound
// messages.
//
//   magic u32 | version u8 (=1) | tag u8 | payload_len u32 | payload
//
// Events use magic "EVNT" and every payload starts with seq u64 | ts u64.
// Southbound messages use magic "SBMG" and carry no common prefix.

#pragma once

#include <span>
#include <type_traits>
#include <vector>

#include "dsdn/wire/bytes.hpp"
#include "dsdn/wire/types.hpp"

namespace dsdn::wire {

inline constexpr uint32_t kEventMagic = 0x45564E54;  // "EVNT"
inline constexpr uint32_t kSbMagic = 0x53424D47;     // "SBMG"
inline constexpr uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;

namespace detail {

enum MatchBits : uint8_t {
  kMatchInPort = 1 << 0,
  kMatchEthSrc = 1 << 1,
  kMatchEthDst = 1 << 2,
  kMatchEthertype = 1 << 3,
};

inline void put_mac(ByteWriter& w, const MacAddr& m) { w.bytes(m.octets); }

inline MacAddr get_mac(ByteReader& r) {
  MacAddr m;
  auto b = r.bytes(6);
  std::copy(b.begin(), b.end(), m.octets.begin());
  return m;
}

inline bool get_bool(ByteReader& r) {
  auto v = r.u8();
  if (v > 1) throw WireError(WireErrc::invalid_field, "boolean byte " + std::to_string(v));
  return v == 1;
}

inline void put_frame(ByteWriter& w, const Frame& f) {
  if (f.payload.size() > kMaxFramePayload) {
    throw WireError(WireErrc::payload_too_large,
                    "frame payload of " + std::to_string(f.payload.size()) + " bytes");
  }
  if (!valid_ethertype(f.ethertype)) {
    throw WireError(WireErrc::invalid_field, "ethertype " + std::to_string(f.ethertype));
  }
  put_mac(w, f.dst);
  put_mac(w, f.src);
  w.u16(f.ethertype);
  w.u32(static_cast<uint32_t>(f.payload.size()));
  w.bytes(f.payload);
}

inline Frame get_frame(ByteReader& r) {
  Frame f;
  f.dst = get_mac(r);
  f.src = get_mac(r);
  f.ethertype = r.u16();
  if (!valid_ethertype(f.ethertype)) {
    throw WireError(WireErrc::invalid_field, "ethertype " + std::to_string(f.ethertype));
  }
  auto plen = r.u32();
  if (plen > kMaxFramePayload) {
    throw WireError(WireErrc::payload_too_large, "frame payload of " + std::to_string(plen));
  }
  auto b = r.bytes(plen);
  f.payload.assign(b.begin(), b.end());
  return f;
}

inline void put_rule(ByteWriter& w, const FlowRule& rule) {
  w.u64(rule.rule_id);
  w.u16(rule.priority);
  const auto& m = rule.match;
  uint8_t bitmap = 0;
  if (m.in_port) bitmap |= kMatchInPort;
  if (m.eth_src) bitmap |= kMatchEthSrc;
  if (m.eth_dst) bitmap |= kMatchEthDst;
  if (m.ethertype) bitmap |= kMatchEthertype;
  w.u8(bitmap);
  if (m.in_port) w.u16(*m.in_port);
  if (m.eth_src) put_mac(w, *m.eth_src);
  if (m.eth_dst) put_mac(w, *m.eth_dst);
  if (m.ethertype) w.u16(*m.ethertype);
  if (rule.actions.size() > 0xFF) {
    throw WireError(WireErrc::payload_too_large, "more than 255 actions");
  }
  w.u8(static_cast<uint8_t>(rule.actions.size()));
  for (const auto& a : rule.actions) {
    w.u8(static_cast<uint8_t>(a.kind));
    w.u16(a.port);
  }
  w.u32(rule.hard_timeout_s);
  w.u64(rule.packet_count);
  w.u64(rule.byte_count);
}

inline FlowRule get_rule(ByteReader& r) {
  FlowRule rule;
  rule.rule_id = r.u64();
  rule.priority = r.u16();
  auto bitmap = r.u8();
  if (bitmap & 0xF0) throw WireError(WireErrc::invalid_field, "match bitmap");
  if (bitmap & kMatchInPort) rule.match.in_port = r.u16();
  if (bitmap & kMatchEthSrc) rule.match.eth_src = get_mac(r);
  if (bitmap & kMatchEthDst) rule.match.eth_dst = get_mac(r);
  if (bitmap & kMatchEthertype) rule.match.ethertype = r.u16();
  auto count = r.u8();
  rule.actions.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto kind = r.u8();
    if (kind < 1 || kind > 4) {
      throw WireError(WireErrc::invalid_field, "action kind " + std::to_string(kind));
    }
    rule.actions.push_back({static_cast<Action::Kind>(kind), r.u16()});
  }
  rule.hard_timeout_s = r.u32();
  rule.packet_count = r.u64();
  rule.byte_count = r.u64();
  return rule;
}

template <class Enum>
Enum get_enum(ByteReader& r, uint8_t lo, uint8_t hi, std::string_view what) {
  auto v = r.u8();
  if (v < lo || v > hi) {
    throw WireError(WireErrc::invalid_field, std::string(what) + " " + std::to_string(v));
  }
  return static_cast<Enum>(v);
}

inline std::size_t begin_frame(ByteWriter& w, uint32_t magic, uint8_t tag) {
  w.u32(magic);
  w.u8(kVersion);
  w.u8(tag);
  auto len_at = w.size();
  w.u32(0);
  return len_at;
}

inline void end_frame(ByteWriter& w, std::size_t len_at) {
  w.patch_u32(len_at, static_cast<uint32_t>(w.size() - len_at - 4));
}

/// Validates the header and returns (tag, payload).
inline std::pair<uint8_t, std::span<const uint8_t>> open_frame(std::span<const uint8_t> b,
                                                               uint32_t magic, uint8_t max_tag) {
  if (b.size() < 4) throw WireError(WireErrc::truncated, "short header");
  ByteReader r(b);
  if (r.u32() != magic) throw WireError(WireErrc::bad_magic, "unexpected magic");
  if (b.size() < kHeaderSize) throw WireError(WireErrc::truncated, "short header");
  auto version = r.u8();
  if (version != kVersion) {
    throw WireError(WireErrc::unknown_version, "version " + std::to_string(version));
  }
  auto tag = r.u8();
  if (tag < 1 || tag > max_tag) throw WireError(WireErrc::unknown_tag, "tag " + std::to_string(tag));
  auto len = r.u32();
  if (len > r.remaining()) {
    throw WireError(WireErrc::truncated, "payload_len " + std::to_string(len) + " exceeds input");
  }
  if (len < r.remaining()) {
    throw WireError(WireErrc::length_mismatch, "trailing bytes after payload");
  }
  return {tag, b.subspan(kHeaderSize)};
}

}  // namespace detail

inline std::vector<uint8_t> encode_event(const Event& e) {
  ByteWriter w(64);
  auto len_at = detail::begin_frame(w, kEventMagic, static_cast<uint8_t>(e.kind()));
  w.u64(e.seq);
  w.u64(e.ts_micros);
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, PacketException>) {
          w.u64(body.dpid);
          w.u16(body.in_port);
          detail::put_frame(w, body.frame);
        } else if constexpr (std::is_same_v<T, TopologyLink>) {
          w.u64(body.src_dpid);
          w.u16(body.src_port);
          w.u64(body.dst_dpid);
          w.u16(body.dst_port);
          w.u8(body.up ? 1 : 0);
        } else if constexpr (std::is_same_v<T, TopologyDevice>) {
          w.u64(body.dpid);
          w.u8(body.up ? 1 : 0);
        } else if constexpr (std::is_same_v<T, TopologyPort>) {
          w.u64(body.dpid);
          w.u16(body.port);
          w.u8(body.up ? 1 : 0);
        } else {
          static_assert(std::is_same_v<T, FlowRuleEvent>);
          w.u8(static_cast<uint8_t>(body.op));
          w.u64(body.dpid);
          detail::put_rule(w, body.rule);
        }
      },
      e.body);
  detail::end_frame(w, len_at);
  return w.take();
}

inline Event decode_event(std::span<const uint8_t> bytes) {
  auto [tag, payload] = detail::open_frame(bytes, kEventMagic, 5);
  ByteReader r(payload, WireErrc::length_mismatch);
  Event e;
  e.seq = r.u64();
  e.ts_micros = r.u64();
  switch (static_cast<EventKind>(tag)) {
    case EventKind::Packet: {
      PacketException p;
      p.dpid = r.u64();
      p.in_port = r.u16();
      p.frame = detail::get_frame(r);
      e.body = std::move(p);
      break;
    }
    case EventKind::Link: {
      TopologyLink l;
      l.src_dpid = r.u64();
      l.src_port = r.u16();
      l.dst_dpid = r.u64();
      l.dst_port = r.u16();
      l.up = detail::get_bool(r);
      e.body = l;
      break;
    }
    case EventKind::Device: {
      TopologyDevice d;
      d.dpid = r.u64();
      d.up = detail::get_bool(r);
      e.body = d;
      break;
    }
    case EventKind::Port: {
      TopologyPort p;
      p.dpid = r.u64();
      p.port = r.u16();
      p.up = detail::get_bool(r);
      e.body = p;
      break;
    }
    case EventKind::FlowRule: {
      FlowRuleEvent f;
      f.op = detail::get_enum<FlowRuleOp>(r, 1, 3, "flow rule op");
      f.dpid = r.u64();
      f.rule = detail::get_rule(r);
      e.body = std::move(f);
      break;
    }
  }
  if (!r.done()) throw WireError(WireErrc::length_mismatch, "unparsed payload bytes");
  return e;
}

inline std::vector<uint8_t> encode_sb(const SbMessage& m) {
  ByteWriter w(64);
  auto len_at = detail::begin_frame(w, kSbMagic, static_cast<uint8_t>(m.index() + 1));
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        w.u64(msg.dpid);
        if constexpr (std::is_same_v<T, Hello>) {
          if (msg.ports.size() > 0xFFFF) {
            throw WireError(WireErrc::payload_too_large, "too many ports");
          }
          w.u16(static_cast<uint16_t>(msg.ports.size()));
          for (auto p : msg.ports) w.u16(p);
        } else if constexpr (std::is_same_v<T, PacketIn>) {
          w.u16(msg.in_port);
          detail::put_frame(w, msg.frame);
        } else if constexpr (std::is_same_v<T, PacketOut>) {
          w.u16(msg.out_port);
          detail::put_frame(w, msg.frame);
        } else if constexpr (std::is_same_v<T, FlowMod>) {
          w.u8(static_cast<uint8_t>(msg.op));
          detail::put_rule(w, msg.rule);
        } else {
          static_assert(std::is_same_v<T, PortStatus>);
          w.u16(msg.port);
          w.u8(msg.up ? 1 : 0);
        }
      },
      m);
  detail::end_frame(w, len_at);
  return w.take();
}

inline SbMessage decode_sb(std::span<const uint8_t> bytes) {
  auto [tag, payload] = detail::open_frame(bytes, kSbMagic, 5);
  ByteReader r(payload, WireErrc::length_mismatch);
  SbMessage out;
  auto dpid = r.u64();
  switch (tag) {
    case 1: {
      Hello h{dpid, {}};
      auto n = r.u16();
      h.ports.reserve(n);
      for (int i = 0; i < n; ++i) h.ports.push_back(r.u16());
      out = std::move(h);
      break;
    }
    case 2: {
      PacketIn p{dpid, r.u16(), {}};
      p.frame = detail::get_frame(r);
      out = std::move(p);
      break;
    }
    case 3: {
      PacketOut p{dpid, r.u16(), {}};
      p.frame = detail::get_frame(r);
      out = std::move(p);
      break;
    }
    case 4: {
      FlowMod f{dpid, detail::get_enum<FlowModOp>(r, 1, 3, "flow mod op"), {}};
      f.rule = detail::get_rule(r);
      out = std::move(f);
      break;
    }
    case 5: {
      PortStatus s{dpid, r.u16(), false};
      s.up = detail::get_bool(r);
      out = s;
      break;
    }
  }
  if (!r.done()) throw WireError(WireErrc::length_mismatch, "unparsed payload bytes");
  return out;
}

}  // namespace dsdn::wire
