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

// Payload formats spoken by simulated hosts.
//
// Data frames (0x0800) start with an application type byte:
//   0 raw      | opaque bytes
//   1 echo req | seq u32 | send_ts_micros u64 | padding
//   2 echo rep | (copy of the request body)
//   3 segment  | conn u16 | seq u32 | padding up to the segment size
//   4 ack      | conn u16 | seq u32
// Address-resolution frames (0x0806): op u8 (1 request, 2 announce) |
// target mac | nonce u32. Both are sent to the broadcast address.

#pragma once

#include <optional>
#include <variant>

#include "dsdn/wire/bytes.hpp"
#include "dsdn/wire/types.hpp"

namespace dsdn::netsim {

enum class AppType : uint8_t { Raw = 0, EchoRequest = 1, EchoReply = 2, Segment = 3, Ack = 4 };

struct EchoBody {
  uint32_t seq = 0;
  uint64_t send_ts_micros = 0;
};

struct SegmentBody {
  uint16_t conn = 0;
  uint32_t seq = 0;
};

enum class ArpOp : uint8_t { Request = 1, Announce = 2 };

struct ArpBody {
  ArpOp op = ArpOp::Announce;
  MacAddr target;
  uint32_t nonce = 0;
};

inline constexpr std::size_t kDefaultPingPayload = 56;
inline constexpr std::size_t kDefaultSegmentBytes = 1464;

inline Frame make_echo(MacAddr dst, MacAddr src, AppType type, const EchoBody& body,
                       std::size_t payload_bytes = kDefaultPingPayload) {
  wire::ByteWriter w(payload_bytes);
  w.u8(static_cast<uint8_t>(type));
  w.u32(body.seq);
  w.u64(body.send_ts_micros);
  auto buf = w.take();
  if (buf.size() < payload_bytes) buf.resize(payload_bytes, 0);
  return Frame{dst, src, kEthData, std::move(buf)};
}

inline Frame make_segment(MacAddr dst, MacAddr src, AppType type, const SegmentBody& body,
                          std::size_t payload_bytes) {
  wire::ByteWriter w(payload_bytes);
  w.u8(static_cast<uint8_t>(type));
  w.u16(body.conn);
  w.u32(body.seq);
  auto buf = w.take();
  if (buf.size() < payload_bytes) buf.resize(payload_bytes, 0);
  return Frame{dst, src, kEthData, std::move(buf)};
}

inline Frame make_raw(MacAddr dst, MacAddr src, std::span<const uint8_t> bytes) {
  std::vector<uint8_t> buf;
  buf.reserve(bytes.size() + 1);
  buf.push_back(static_cast<uint8_t>(AppType::Raw));
  buf.insert(buf.end(), bytes.begin(), bytes.end());
  return Frame{dst, src, kEthData, std::move(buf)};
}

inline Frame make_arp(MacAddr src, const ArpBody& body) {
  wire::ByteWriter w(11);
  w.u8(static_cast<uint8_t>(body.op));
  w.bytes(body.target.octets);
  w.u32(body.nonce);
  return Frame{MacAddr::broadcast(), src, kEthArp, w.take()};
}

inline std::optional<AppType> app_type(const Frame& f) {
  if (f.ethertype != kEthData || f.payload.empty() || f.payload[0] > 4) return std::nullopt;
  return static_cast<AppType>(f.payload[0]);
}

inline std::optional<EchoBody> parse_echo(const Frame& f) {
  try {
    wire::ByteReader r(f.payload);
    r.u8();
    EchoBody b;
    b.seq = r.u32();
    b.send_ts_micros = r.u64();
    return b;
  } catch (const wire::WireError&) {
    return std::nullopt;
  }
}

inline std::optional<SegmentBody> parse_segment(const Frame& f) {
  try {
    wire::ByteReader r(f.payload);
    r.u8();
    SegmentBody b;
    b.conn = r.u16();
    b.seq = r.u32();
    return b;
  } catch (const wire::WireError&) {
    return std::nullopt;
  }
}

inline std::optional<ArpBody> parse_arp(const Frame& f) {
  if (f.ethertype != kEthArp) return std::nullopt;
  try {
    wire::ByteReader r(f.payload);
    ArpBody b;
    auto op = r.u8();
    if (op != 1 && op != 2) return std::nullopt;
    b.op = static_cast<ArpOp>(op);
    auto t = r.bytes(6);
    std::copy(t.begin(), t.end(), b.target.octets.begin());
    b.nonce = r.u32();
    return b;
  } catch (const wire::WireError&) {
    return std::nullopt;
  }
}

}  // namespace dsdn::netsim
