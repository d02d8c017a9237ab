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

// Event sources and the threads that feed them into services.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dsdn/dist/broker.hpp"
#include "dsdn/dist/p2p.hpp"
#include "dsdn/dist/remote.hpp"
#include "dsdn/services/forwarding.hpp"
#include "dsdn/services/topology.hpp"
#include "dsdn/wire/codec.hpp"

namespace dsdn::services {

using namespace std::chrono_literals;

/// A stream of decoded events for one service.
class EventSource {
 public:
  virtual ~EventSource() = default;
  /// Next event, waiting at most `timeout`.
  virtual std::optional<Event> next(std::chrono::microseconds timeout) = 0;
  /// False once the source has nothing buffered or known to be waiting.
  /// Safe to call from any thread.
  virtual bool pending() = 0;
  virtual void close() {}
  uint64_t malformed() const { return malformed_.load(); }

 protected:
  std::optional<Event> decode(const std::vector<uint8_t>& bytes) {
    try {
      return wire::decode_event(bytes);
    } catch (const wire::WireError&) {
      ++malformed_;
      return std::nullopt;
    }
  }

 private:
  std::atomic<uint64_t> malformed_{0};
};

class HubSource final : public EventSource {
 public:
  HubSource(dist::P2pHub& hub, dist::KindMask kinds) : hub_(hub) {
    std::tie(id_, sub_) = hub_.subscribe(kinds);
  }
  ~HubSource() override { close(); }

  std::optional<Event> next(std::chrono::microseconds timeout) override {
    auto bytes = sub_->pop(timeout);
    if (!bytes) return std::nullopt;
    return decode(*bytes);
  }

  bool pending() override { return sub_->size() > 0; }

  void close() override {
    if (closed_.exchange(true)) return;
    try {
      hub_.unsubscribe(id_);
    } catch (const std::out_of_range&) {
    }
  }

  uint64_t drops() const { return sub_->drops(); }

 private:
  dist::P2pHub& hub_;
  uint64_t id_ = 0;
  std::shared_ptr<dist::Subscription> sub_;
  std::atomic<bool> closed_{false};
};

class RemoteHubSource final : public EventSource {
 public:
  RemoteHubSource(const std::string& host, int port, dist::KindMask kinds) : sub_(host, port, kinds) {}
  ~RemoteHubSource() override { close(); }

  std::optional<Event> next(std::chrono::microseconds timeout) override {
    auto bytes = sub_.next(timeout);
    if (!bytes) return std::nullopt;
    return decode(*bytes);
  }

  bool pending() override { return sub_.readable(); }

  void close() override { sub_.close(); }

 private:
  dist::RemoteSubscription sub_;
};

/// Polls one topic per kind. An empty round of polls sleeps for
/// `poll_interval` before the next.
class BrokerSource final : public EventSource {
 public:
  BrokerSource(dist::BrokerApi& broker, std::string consumer, const std::vector<EventKind>& kinds,
               std::chrono::microseconds poll_interval, uint64_t from_offset = 0)
      : broker_(broker), consumer_(std::move(consumer)), poll_interval_(poll_interval) {
    for (auto k : kinds) topics_.push_back({dist::topic_for(k), from_offset});
  }

  std::optional<Event> next(std::chrono::microseconds timeout) override {
    auto deadline = Clock::now() + timeout;
    for (;;) {
      if (!buffer_.empty()) {
        auto e = std::move(buffer_.front());
        buffer_.pop_front();
        buffered_ = buffer_.size();
        return e;
      }
      fill();
      if (!buffer_.empty()) continue;
      auto now = Clock::now();
      if (now >= deadline) return std::nullopt;
      std::this_thread::sleep_for(std::min<std::chrono::nanoseconds>(poll_interval_, deadline - now));
    }
  }

  bool pending() override { return buffered_ > 0 || !last_poll_empty_; }

 private:
  struct Cursor {
    std::string topic;
    uint64_t offset;
  };

  void fill() {
    std::vector<Event> batch;
    for (auto& c : topics_) {
      auto records = broker_.poll(consumer_, c.topic, c.offset, 256, 0ms);
      if (records.empty()) continue;
      c.offset = records.back().offset + 1;
      for (const auto& r : records) {
        if (auto e = decode(r.bytes)) batch.push_back(std::move(*e));
      }
      broker_.commit(consumer_, c.topic, c.offset);
    }
    last_poll_empty_ = batch.empty();
    // topics are ordered individually; interleave them by core sequence
    std::sort(batch.begin(), batch.end(), [](const Event& a, const Event& b) { return a.seq < b.seq; });
    for (auto& e : batch) buffer_.push_back(std::move(e));
    buffered_ = buffer_.size();
  }

  dist::BrokerApi& broker_;
  std::string consumer_;
  std::chrono::microseconds poll_interval_;
  std::vector<Cursor> topics_;
  std::deque<Event> buffer_;
  std::atomic<std::size_t> buffered_{0};
  std::atomic<bool> last_poll_empty_{false};
};

/// Runs one service on its own thread, feeding it events from a source.
class ServiceRunner {
 public:
  using Handler = std::function<void(const Event&)>;

  ServiceRunner(std::unique_ptr<EventSource> source, Handler handler)
      : source_(std::move(source)), handler_(std::move(handler)), thread_([this] { loop(); }) {}

  ServiceRunner(const ServiceRunner&) = delete;
  ServiceRunner& operator=(const ServiceRunner&) = delete;

  ~ServiceRunner() { stop(); }

  void stop() {
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
    source_->close();
  }

  /// Not handling an event and nothing known to be waiting. A source may
  /// hold an event for a moment between pending() and the handler, so
  /// callers should see several idle readings in a row.
  bool idle() { return !busy_ && !source_->pending(); }

  uint64_t handled() const { return handled_.load(); }
  uint64_t handler_errors() const { return errors_.load(); }
  EventSource& source() { return *source_; }

 private:
  void loop() {
    while (!stopping_) {
      std::optional<Event> e;
      try {
        e = source_->next(20ms);
      } catch (const std::exception&) {
        ++errors_;
        std::this_thread::sleep_for(20ms);
      }
      if (!e) continue;
      busy_ = true;
      try {
        handler_(*e);
      } catch (const std::exception&) {
        ++errors_;
      }
      ++handled_;
      busy_ = false;
    }
  }

  std::unique_ptr<EventSource> source_;
  Handler handler_;
  std::atomic<bool> busy_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<uint64_t> handled_{0};
  std::atomic<uint64_t> errors_{0};
  std::thread thread_;
};

/// Runs discovery rounds on a fixed interval until stopped.
class DiscoveryTimer {
 public:
  DiscoveryTimer(TopologyService& topo, std::chrono::milliseconds interval)
      : topo_(topo), interval_(interval), thread_([this] { loop(); }) {}

  ~DiscoveryTimer() { stop(); }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void loop() {
    std::unique_lock lock(mu_);
    while (!stopping_) {
      lock.unlock();
      topo_.discovery_round();
      lock.lock();
      cv_.wait_for(lock, interval_, [&] { return stopping_; });
    }
  }

  TopologyService& topo_;
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread thread_;
};

/// Both services behind the core's in-process handler hook.
class InternalApp final : public core::EventHandler {
 public:
  InternalApp(TopologyService& topo, Forwarder& fwd) : topo_(topo), fwd_(fwd) {}

  void on_event(const Event& e) override {
    topo_.on_event(e);
    fwd_.on_event(e);
  }

 private:
  TopologyService& topo_;
  Forwarder& fwd_;
};

inline const std::vector<EventKind> kTopologyKinds = {EventKind::Packet, EventKind::Link, EventKind::Device,
                                                      EventKind::Port};
inline const std::vector<EventKind> kForwardingKinds = {EventKind::Packet};

inline dist::KindMask mask_of(const std::vector<EventKind>& kinds) {
  dist::KindMask m = 0;
  for (auto k : kinds) m |= kind_bit(k);
  return m;
}

}  // namespace dsdn::services
