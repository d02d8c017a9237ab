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

// Shortest-path forwarding driven by packet exceptions.

#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsdn/core/controller.hpp"
#include "dsdn/core/rest.hpp"
#include "dsdn/services/topology.hpp"

namespace dsdn::services {

enum class InstallChannel { Direct, Rest };

inline std::string_view to_string(InstallChannel c) { return c == InstallChannel::Direct ? "direct" : "rest"; }

struct FwdConfig {
  bool install_rules = false;
  uint32_t hard_timeout_s = 10;
  uint16_t priority = 100;
  InstallChannel channel = InstallChannel::Direct;
};

/// How forwarding pushes rules into the core.
class FlowInstaller {
 public:
  virtual ~FlowInstaller() = default;
  virtual RuleId install(const core::FlowModRequest& req) = 0;
};

class DirectInstaller final : public FlowInstaller {
 public:
  explicit DirectInstaller(core::CoreApi& core) : core_(core) {}
  RuleId install(const core::FlowModRequest& req) override { return core_.flow_mod(req); }

 private:
  core::CoreApi& core_;
};

/// Installs through the REST front end. Keeps one keep-alive client per
/// concurrent caller.
class RestInstaller final : public FlowInstaller {
 public:
  RestInstaller(std::string host, int port) : host_(std::move(host)), port_(port) {}

  RuleId install(const core::FlowModRequest& req) override {
    auto client = acquire();
    auto id = client->add(req);
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(client));
    return id;
  }

 private:
  std::unique_ptr<core::RestFlowClient> acquire() {
    std::lock_guard lock(mu_);
    if (idle_.empty()) return std::make_unique<core::RestFlowClient>(host_, port_);
    auto c = std::move(idle_.back());
    idle_.pop_back();
    return c;
  }

  std::string host_;
  int port_;
  std::mutex mu_;
  std::vector<std::unique_ptr<core::RestFlowClient>> idle_;
};

struct ForwarderStats {
  uint64_t packets = 0;
  uint64_t floods = 0;
  uint64_t floods_suppressed = 0;
  uint64_t directed = 0;
  uint64_t flow_mods = 0;
  uint64_t install_errors = 0;
  uint64_t path_errors = 0;
  uint64_t core_errors = 0;
};

inline uint64_t frame_hash(const Frame& f) {
  // FNV-1a over the header fields and payload
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (auto b : f.dst.octets) mix(b);
  for (auto b : f.src.octets) mix(b);
  mix(static_cast<uint8_t>(f.ethertype >> 8));
  mix(static_cast<uint8_t>(f.ethertype));
  for (auto b : f.payload) mix(b);
  return h;
}

/// Floods are suppressed when the same frame reaches the same switch again
/// within the TTL; FLOOD has no ingress to exclude, so without this a
/// broadcast would circulate forever on any loop or chain.
class FloodGuard {
 public:
  explicit FloodGuard(std::chrono::milliseconds ttl = std::chrono::milliseconds(500)) : ttl_(ttl) {}

  /// True if the frame should be flooded now.
  bool admit(Dpid dpid, const Frame& f, TimePoint now = Clock::now()) {
    std::lock_guard lock(mu_);
    if (now - last_sweep_ > ttl_) {
      std::erase_if(seen_, [&](const auto& kv) { return now - kv.second > ttl_; });
      last_sweep_ = now;
    }
    Key key{dpid, frame_hash(f)};
    auto [it, inserted] = seen_.try_emplace(key, now);
    if (inserted) return true;
    if (now - it->second > ttl_) {
      it->second = now;
      return true;
    }
    return false;
  }

 private:
  struct Key {
    Dpid dpid;
    uint64_t hash;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return std::hash<uint64_t>{}(k.hash ^ (k.dpid * 0x9E3779B97F4A7C15ull)); }
  };

  std::chrono::milliseconds ttl_;
  std::mutex mu_;
  std::unordered_map<Key, TimePoint, KeyHash> seen_;
  TimePoint last_sweep_{};
};

class Forwarder {
 public:
  /// `installer` may be null when `cfg.install_rules` is false.
  Forwarder(FwdConfig cfg, core::CoreApi& core, TopologyQuery& topo, FlowInstaller* installer)
      : cfg_(cfg), core_(core), topo_(topo), installer_(installer) {
    if (cfg_.install_rules && !installer_) throw std::invalid_argument("rule installation needs an installer");
  }

  const FwdConfig& config() const { return cfg_; }

  void on_event(const Event& e) {
    if (auto* pe = e.as<PacketException>()) on_packet(*pe);
  }

  void on_packet(const PacketException& pe) {
    const Frame& f = pe.frame;
    if (f.ethertype == kEthDiscovery) return;
    bump(&ForwarderStats::packets);
    topo_.learn_host(f.src, pe.dpid, pe.in_port);

    if (f.dst.is_broadcast()) {
      flood(pe);
      return;
    }
    std::vector<Hop> hops;
    try {
      hops = topo_.path_from(pe.dpid, pe.in_port, f.dst);
    } catch (const PathError&) {
      bump(&ForwarderStats::path_errors);
      flood(pe);
      return;
    }
    if (cfg_.install_rules) {
      for (const auto& h : hops) {
        core::FlowModRequest req;
        req.dpid = h.dpid;
        req.op = FlowModOp::Add;
        req.priority = cfg_.priority;
        req.match.eth_dst = f.dst;
        req.actions = {Action::output(h.out_port)};
        req.hard_timeout_s = cfg_.hard_timeout_s;
        try {
          installer_->install(req);
          bump(&ForwarderStats::flow_mods);
        } catch (const std::exception&) {
          // the packet_out below still moves this frame; the next one retries
          bump(&ForwarderStats::install_errors);
        }
      }
    }
    try {
      core_.packet_out(pe.dpid, hops.front().out_port, f);
      bump(&ForwarderStats::directed);
    } catch (const std::exception&) {
      bump(&ForwarderStats::core_errors);
    }
  }

  ForwarderStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

 private:
  void flood(const PacketException& pe) {
    if (!guard_.admit(pe.dpid, pe.frame)) {
      bump(&ForwarderStats::floods_suppressed);
      return;
    }
    try {
      core_.packet_out(pe.dpid, kFloodPort, pe.frame);
      bump(&ForwarderStats::floods);
    } catch (const std::exception&) {
      bump(&ForwarderStats::core_errors);
    }
  }

  void bump(uint64_t ForwarderStats::*field) {
    std::lock_guard lock(mu_);
    ++(stats_.*field);
  }

  const FwdConfig cfg_;
  core::CoreApi& core_;
  TopologyQuery& topo_;
  FlowInstaller* installer_;
  FloodGuard guard_;
  mutable std::mutex mu_;
  ForwarderStats stats_;
};

}  // namespace dsdn::services
