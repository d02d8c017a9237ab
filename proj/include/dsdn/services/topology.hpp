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

// Topology discovery and path computation.
//
// Discovery frames: ethertype 0x88CC, broadcast dst, all-zero src, payload
// origin dpid u64 | origin port u16 | round u32.

#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "dsdn/core/controller.hpp"
#include "dsdn/netsim/network_spec.hpp"
#include "dsdn/wire/bytes.hpp"

namespace dsdn::services {

using netsim::DirectedLink;
using netsim::PortRef;

struct DiscoveryPayload {
  Dpid origin_dpid = 0;
  PortNo origin_port = 0;
  uint32_t round = 0;
};

inline Frame make_discovery(const DiscoveryPayload& p) {
  wire::ByteWriter w(14);
  w.u64(p.origin_dpid);
  w.u16(p.origin_port);
  w.u32(p.round);
  return Frame{MacAddr::broadcast(), MacAddr{}, kEthDiscovery, w.take()};
}

inline std::optional<DiscoveryPayload> parse_discovery(const Frame& f) {
  if (f.ethertype != kEthDiscovery || f.payload.size() != 14) return std::nullopt;
  wire::ByteReader r(f.payload);
  DiscoveryPayload p;
  p.origin_dpid = r.u64();
  p.origin_port = r.u16();
  p.round = r.u32();
  return p;
}

struct Hop {
  Dpid dpid = 0;
  PortNo in_port = 0;
  PortNo out_port = 0;
  friend bool operator==(const Hop&, const Hop&) = default;
};

enum class PathErrc { no_location, no_path };

class PathError : public std::runtime_error {
 public:
  PathError(PathErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  PathErrc code() const { return code_; }

 private:
  PathErrc code_;
};

/// The query side of the topology service, as used by forwarding.
class TopologyQuery {
 public:
  virtual ~TopologyQuery() = default;
  /// Hops from a frame entering `dpid` on `in_port` to the host `dst`.
  virtual std::vector<Hop> path_from(Dpid dpid, PortNo in_port, MacAddr dst) = 0;
  virtual void learn_host(MacAddr mac, Dpid dpid, PortNo port) = 0;
};

/// Not synchronized; TopologyService wraps it in a mutex.
class TopologyGraph {
 public:
  void add_switch(Dpid dpid) { switches_.insert(dpid); }

  bool has_switch(Dpid dpid) const { return switches_.contains(dpid); }

  const std::set<Dpid>& switches() const { return switches_; }

  /// Drops the switch, its links in both directions and hosts attached to it.
  std::vector<DirectedLink> remove_switch(Dpid dpid) {
    switches_.erase(dpid);
    std::vector<DirectedLink> removed;
    for (auto it = links_.begin(); it != links_.end();) {
      if (it->first.dpid == dpid || it->second.dst.dpid == dpid) {
        removed.emplace_back(it->first, it->second.dst);
        it = links_.erase(it);
      } else {
        ++it;
      }
    }
    std::erase_if(hosts_, [&](const auto& kv) { return kv.second.dpid == dpid; });
    return removed;
  }

  /// Removes every link that starts or ends at `port`.
  std::vector<DirectedLink> remove_port_links(PortRef port) {
    std::vector<DirectedLink> removed;
    for (auto it = links_.begin(); it != links_.end();) {
      if (it->first == port || it->second.dst == port) {
        removed.emplace_back(it->first, it->second.dst);
        it = links_.erase(it);
      } else {
        ++it;
      }
    }
    return removed;
  }

  /// Records src -> dst as seen in `round`. Returns true if the link is new
  /// or changed its far end.
  bool observe_link(PortRef src, PortRef dst, uint32_t round) {
    auto it = links_.find(src);
    if (it != links_.end() && it->second.dst == dst) {
      it->second.last_round = std::max(it->second.last_round, round);
      return false;
    }
    links_[src] = LinkState{dst, round};
    // a port that carries a switch link has no host behind it
    std::erase_if(hosts_, [&](const auto& kv) { return kv.second == src || kv.second == dst; });
    return true;
  }

  /// Removes links last seen more than `max_age` rounds before `round`.
  std::vector<DirectedLink> expire_links(uint32_t round, uint32_t max_age) {
    std::vector<DirectedLink> removed;
    for (auto it = links_.begin(); it != links_.end();) {
      if (round > it->second.last_round + max_age) {
        removed.emplace_back(it->first, it->second.dst);
        it = links_.erase(it);
      } else {
        ++it;
      }
    }
    return removed;
  }

  bool is_link_port(PortRef p) const {
    if (links_.contains(p)) return true;
    for (const auto& [src, l] : links_) {
      if (l.dst == p) return true;
    }
    return false;
  }

  /// Host attachment from an observation at an edge port. Observations on
  /// ports that carry switch links are ignored. Returns true on change.
  bool learn_host(MacAddr mac, PortRef at) {
    if (mac.is_broadcast() || mac == MacAddr{} || !switches_.contains(at.dpid) || is_link_port(at)) {
      return false;
    }
    auto [it, inserted] = hosts_.try_emplace(mac, at);
    if (inserted) return true;
    if (it->second == at) return false;
    it->second = at;
    return true;
  }

  std::optional<PortRef> host(MacAddr mac) const {
    auto it = hosts_.find(mac);
    if (it == hosts_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<MacAddr, PortRef>& hosts() const { return hosts_; }

  std::set<DirectedLink> links() const {
    std::set<DirectedLink> out;
    for (const auto& [src, l] : links_) out.emplace(src, l.dst);
    return out;
  }

  /// Fewest-switch path from a frame on (dpid, in_port) to `dst`. Among
  /// equal-length choices the next hop with the smallest dpid (then port)
  /// wins.
  std::vector<Hop> path_from(Dpid dpid, PortNo in_port, MacAddr dst) const {
    auto target = host(dst);
    if (!target) throw PathError(PathErrc::no_location, "no location for " + dst.to_string());
    if (!switches_.contains(dpid)) {
      throw PathError(PathErrc::no_path, "unknown switch " + std::to_string(dpid));
    }
    auto dist = distances_to(target->dpid);
    if (!dist.contains(dpid)) {
      throw PathError(PathErrc::no_path, "no path from " + std::to_string(dpid) + " to " + dst.to_string());
    }
    std::vector<Hop> hops;
    Dpid at = dpid;
    PortNo in = in_port;
    while (at != target->dpid) {
      std::optional<DirectedLink> best;
      for (auto it = links_.lower_bound(PortRef{at, 0});
           it != links_.end() && it->first.dpid == at; ++it) {
        auto d = dist.find(it->second.dst.dpid);
        if (d == dist.end() || d->second + 1 != dist.at(at)) continue;
        DirectedLink cand{it->first, it->second.dst};
        if (!best || cand.second.dpid < best->second.dpid ||
            (cand.second.dpid == best->second.dpid && cand.first.port < best->first.port)) {
          best = cand;
        }
      }
      // distances guarantee a successor exists
      hops.push_back({at, in, best->first.port});
      in = best->second.port;
      at = best->second.dpid;
    }
    hops.push_back({at, in, target->port});
    return hops;
  }

  std::vector<Hop> shortest_path(MacAddr src, MacAddr dst) const {
    auto from = host(src);
    if (!from) throw PathError(PathErrc::no_location, "no location for " + src.to_string());
    return path_from(from->dpid, from->port, dst);
  }

 private:
  struct LinkState {
    PortRef dst;
    uint32_t last_round = 0;
  };

  /// Switch hop counts to `target` along links (reverse BFS).
  std::map<Dpid, int> distances_to(Dpid target) const {
    std::map<Dpid, std::vector<Dpid>> reverse;
    for (const auto& [src, l] : links_) reverse[l.dst.dpid].push_back(src.dpid);
    std::map<Dpid, int> dist{{target, 0}};
    std::queue<Dpid> q;
    q.push(target);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : reverse[u]) {
        if (dist.emplace(v, dist[u] + 1).second) q.push(v);
      }
    }
    return dist;
  }

  std::set<Dpid> switches_;
  std::map<PortRef, LinkState> links_;  // keyed by source port
  std::map<MacAddr, PortRef> hosts_;
};

/// Topology microservice: consumes packet/device/port/link events, runs
/// discovery rounds through the core and answers path queries.
class TopologyService final : public TopologyQuery {
 public:
  static constexpr uint32_t kStaleRounds = 3;

  explicit TopologyService(core::CoreApi& core) : core_(core) {}

  void on_event(const Event& e) {
    if (auto* pe = e.as<PacketException>()) {
      on_packet(*pe);
    } else if (auto* dev = e.as<TopologyDevice>()) {
      std::vector<DirectedLink> gone;
      {
        std::lock_guard lock(mu_);
        if (dev->up) {
          graph_.add_switch(dev->dpid);
        } else {
          gone = graph_.remove_switch(dev->dpid);
        }
      }
      report_removed(gone);
    } else if (auto* port = e.as<TopologyPort>()) {
      std::vector<DirectedLink> gone;
      {
        std::lock_guard lock(mu_);
        if (port->up) {
          graph_.add_switch(port->dpid);
        } else {
          gone = graph_.remove_port_links({port->dpid, port->port});
        }
      }
      report_removed(gone);
    } else if (auto* link = e.as<TopologyLink>()) {
      // our own reports come back here; only removals from others matter
      if (!link->up) {
        std::lock_guard lock(mu_);
        graph_.remove_port_links({link->src_dpid, link->src_port});
      }
    }
  }

  /// Sends one discovery frame out of every port of every switch the core
  /// knows, after ageing out stale links. Returns false if the core could
  /// not be reached.
  bool discovery_round() {
    std::vector<core::SwitchInfo> sw;
    try {
      sw = core_.switches();
    } catch (const std::exception&) {
      return false;
    }
    uint32_t round;
    std::vector<DirectedLink> gone;
    {
      std::lock_guard lock(mu_);
      round = ++round_;
      for (const auto& s : sw) graph_.add_switch(s.dpid);
      gone = graph_.expire_links(round, kStaleRounds);
    }
    report_removed(gone);
    try {
      for (const auto& s : sw) {
        for (auto p : s.ports) core_.packet_out(s.dpid, p, make_discovery({s.dpid, p, round}));
      }
    } catch (const std::exception&) {
      return false;
    }
    return true;
  }

  // TopologyQuery

  std::vector<Hop> path_from(Dpid dpid, PortNo in_port, MacAddr dst) override {
    std::lock_guard lock(mu_);
    return graph_.path_from(dpid, in_port, dst);
  }

  void learn_host(MacAddr mac, Dpid dpid, PortNo port) override {
    std::lock_guard lock(mu_);
    graph_.learn_host(mac, {dpid, port});
  }

  std::vector<Hop> shortest_path(MacAddr src, MacAddr dst) {
    std::lock_guard lock(mu_);
    return graph_.shortest_path(src, dst);
  }

  std::set<DirectedLink> links() const {
    std::lock_guard lock(mu_);
    return graph_.links();
  }

  std::map<MacAddr, PortRef> hosts() const {
    std::lock_guard lock(mu_);
    return graph_.hosts();
  }

  std::set<Dpid> switches() const {
    std::lock_guard lock(mu_);
    return graph_.switches();
  }

  uint32_t round() const {
    std::lock_guard lock(mu_);
    return round_;
  }

  uint64_t malformed_discovery() const {
    std::lock_guard lock(mu_);
    return malformed_;
  }

 private:
  void on_packet(const PacketException& pe) {
    const auto& f = pe.frame;
    if (f.ethertype == kEthDiscovery) {
      auto p = parse_discovery(f);
      bool added = false;
      {
        std::lock_guard lock(mu_);
        if (!p || !graph_.has_switch(p->origin_dpid) || !graph_.has_switch(pe.dpid)) {
          ++malformed_;
          return;
        }
        added = graph_.observe_link({p->origin_dpid, p->origin_port}, {pe.dpid, pe.in_port}, p->round);
      }
      if (added) report({p->origin_dpid, p->origin_port, pe.dpid, pe.in_port, true});
      return;
    }
    if (f.ethertype == kEthArp) {
      std::lock_guard lock(mu_);
      graph_.learn_host(f.src, {pe.dpid, pe.in_port});
    }
  }

  void report_removed(const std::vector<DirectedLink>& gone) {
    for (const auto& [src, dst] : gone) report({src.dpid, src.port, dst.dpid, dst.port, false});
  }

  void report(const TopologyLink& l) {
    try {
      core_.report_link(l);
    } catch (const std::exception&) {
      // the link is still in (or out of) our graph; the core will hear next time
    }
  }

  core::CoreApi& core_;
  mutable std::mutex mu_;
  TopologyGraph graph_;
  uint32_t round_ = 0;
  uint64_t malformed_ = 0;
};

}  // namespace dsdn::services
