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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsdn::wire {

enum class WireErrc {
  truncated = 1,
  bad_magic,
  unknown_version,
  unknown_tag,
  length_mismatch,
  invalid_field,
  payload_too_large,
};

inline std::string_view to_string(WireErrc c) {
  switch (c) {
    case WireErrc::truncated: return "truncated";
    case WireErrc::bad_magic: return "bad magic";
    case WireErrc::unknown_version: return "unknown version";
    case WireErrc::unknown_tag: return "unknown tag";
    case WireErrc::length_mismatch: return "length mismatch";
    case WireErrc::invalid_field: return "invalid field";
    case WireErrc::payload_too_large: return "payload too large";
  }
  return "?";
}

class WireError : public std::runtime_error {
 public:
  WireError(WireErrc code, std::string_view what)
      : std::runtime_error(std::string(to_string(code)) + ": " + std::string(what)), code_(code) {}

  WireErrc code() const noexcept { return code_; }

 private:
  WireErrc code_;
};

/// Appends big-endian integers to a growable buffer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { put(v, 2); }
  void u32(uint32_t v) { put(v, 4); }
  void u64(uint64_t v) { put(v, 8); }
  void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  /// u16 length prefix + raw bytes.
  void str16(std::string_view s) {
    if (s.size() > 0xFFFF) throw WireError(WireErrc::payload_too_large, "string exceeds 65535 bytes");
    u16(static_cast<uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  /// Overwrites a previously written u32 at `at`.
  void patch_u32(std::size_t at, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_[at + i] = static_cast<uint8_t>(v >> (24 - 8 * i));
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<uint8_t>& buffer() { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  void put(uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  std::vector<uint8_t> buf_;
};

/// Reads big-endian integers from a fixed span. Running off the end throws
/// WireError with the code chosen at construction.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data, WireErrc overrun = WireErrc::truncated)
      : data_(data), overrun_(overrun) {}

  uint8_t u8() { return static_cast<uint8_t>(get(1)); }
  uint16_t u16() { return static_cast<uint16_t>(get(2)); }
  uint32_t u32() { return static_cast<uint32_t>(get(4)); }
  uint64_t u64() { return get(8); }

  std::span<const uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string str16() {
    auto n = u16();
    auto b = bytes(n);
    return std::string(b.begin(), b.end());
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw WireError(overrun_, "need " + std::to_string(n) + " bytes, have " +
                                                       std::to_string(remaining()));
  }

  uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::span<const uint8_t> data_;
  std::size_t pos_ = 0;
  WireErrc overrun_;
};

}  // namespace dsdn::wire
