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

#include <algorithm>
#include <compare>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dsdn/wire/types.hpp"

namespace dsdn::netsim {

struct PortRef {
  Dpid dpid = 0;
  PortNo port = 0;
  friend bool operator==(const PortRef&, const PortRef&) = default;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

using DirectedLink = std::pair<PortRef, PortRef>;

struct SwitchSpec {
  Dpid dpid = 0;
  uint16_t port_count = 0;  // ports are numbered 1..port_count
};

struct SwitchLinkSpec {
  PortRef a;
  PortRef b;
};

struct HostSpec {
  uint32_t host_id = 0;
  MacAddr mac;
  PortRef attachment;
};

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NetworkSpec {
  std::vector<SwitchSpec> switches;
  std::vector<SwitchLinkSpec> links;
  std::vector<HostSpec> hosts;

  /// Throws TopologyError when a port is used twice or does not exist.
  void validate() const {
    std::map<Dpid, uint16_t> ports;
    for (const auto& s : switches) {
      if (!ports.emplace(s.dpid, s.port_count).second) {
        throw TopologyError("duplicate dpid " + std::to_string(s.dpid));
      }
    }
    std::set<PortRef> used;
    auto claim = [&](const PortRef& p) {
      auto it = ports.find(p.dpid);
      if (it == ports.end()) throw TopologyError("unknown dpid " + std::to_string(p.dpid));
      if (p.port < 1 || p.port > it->second) {
        throw TopologyError("port " + std::to_string(p.port) + " out of range on dpid " +
                            std::to_string(p.dpid));
      }
      if (!used.insert(p).second) {
        throw TopologyError("port " + std::to_string(p.port) + " of dpid " +
                            std::to_string(p.dpid) + " used twice");
      }
    };
    for (const auto& l : links) {
      claim(l.a);
      claim(l.b);
    }
    std::set<MacAddr> macs;
    for (const auto& h : hosts) {
      claim(h.attachment);
      if (!macs.insert(h.mac).second) throw TopologyError("duplicate host mac " + h.mac.to_string());
    }
  }

  /// Both directions of every switch-to-switch link.
  std::set<DirectedLink> directed_links() const {
    std::set<DirectedLink> out;
    for (const auto& l : links) {
      out.emplace(l.a, l.b);
      out.emplace(l.b, l.a);
    }
    return out;
  }

  const HostSpec& host(uint32_t host_id) const {
    for (const auto& h : hosts) {
      if (h.host_id == host_id) return h;
    }
    throw TopologyError("unknown host " + std::to_string(host_id));
  }

  /// Number of switches on the fewest-hop path between two switches (BFS).
  /// Returns 0 when unreachable.
  std::size_t switch_hops(Dpid from, Dpid to) const {
    std::map<Dpid, std::vector<Dpid>> adj;
    for (const auto& l : links) {
      adj[l.a.dpid].push_back(l.b.dpid);
      adj[l.b.dpid].push_back(l.a.dpid);
    }
    std::map<Dpid, std::size_t> dist{{from, 1}};
    std::queue<Dpid> q;
    q.push(from);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      if (u == to) return dist[u];
      for (auto v : adj[u]) {
        if (dist.emplace(v, dist[u] + 1).second) q.push(v);
      }
    }
    return 0;
  }

  /// One line per node and link, for debugging.
  std::string dump() const {
    std::ostringstream os;
    for (const auto& s : switches) os << "switch " << s.dpid << " ports=" << s.port_count << "\n";
    for (const auto& h : hosts) {
      os << "host " << h.host_id << " mac=" << h.mac.to_string() << " at " << h.attachment.dpid
         << ":" << h.attachment.port << "\n";
    }
    for (const auto& l : links) {
      os << "link " << l.a.dpid << ":" << l.a.port << " <-> " << l.b.dpid << ":" << l.b.port
         << "\n";
    }
    return os.str();
  }
};

/// Standard k-ary fat-tree.
///
/// dpids: core switches 1..(k/2)^2, then pod p (0-based) occupies
/// base + p*k + [0, k/2) for aggregation and base + p*k + [k/2, k) for edge,
/// where base = (k/2)^2 + 1. Every switch has k ports.
///   edge:  ports 1..k/2 -> hosts, port k/2+1+a -> aggregation a of its pod
///   agg a: port 1+e -> edge e of its pod, port k/2+1+j -> core a*(k/2)+j
///   core c: port 1+p -> the aggregation switch of pod p it attaches to
/// Host ids start at 1 and enumerate pods, then edges, then edge ports.
inline NetworkSpec build_fat_tree(int k) {
  if (k < 2 || k % 2 != 0) {
    throw TopologyError("fat-tree arity must be even and >= 2, got " + std::to_string(k));
  }
  const int half = k / 2;
  const int cores = half * half;
  const Dpid base = static_cast<Dpid>(cores) + 1;
  auto agg = [&](int pod, int a) { return base + static_cast<Dpid>(pod * k + a); };
  auto edge = [&](int pod, int e) { return base + static_cast<Dpid>(pod * k + half + e); };
  auto port = [](int p) { return static_cast<PortNo>(p); };

  NetworkSpec spec;
  for (int c = 0; c < cores; ++c) spec.switches.push_back({static_cast<Dpid>(c + 1), port(k)});
  for (int p = 0; p < k; ++p) {
    for (int a = 0; a < half; ++a) spec.switches.push_back({agg(p, a), port(k)});
    for (int e = 0; e < half; ++e) spec.switches.push_back({edge(p, e), port(k)});
  }

  uint32_t host_id = 1;
  for (int p = 0; p < k; ++p) {
    for (int e = 0; e < half; ++e) {
      for (int h = 0; h < half; ++h) {
        spec.hosts.push_back({host_id, host_mac(host_id), {edge(p, e), port(1 + h)}});
        ++host_id;
      }
      for (int a = 0; a < half; ++a) {
        spec.links.push_back({{edge(p, e), port(half + 1 + a)}, {agg(p, a), port(1 + e)}});
      }
    }
    for (int a = 0; a < half; ++a) {
      for (int j = 0; j < half; ++j) {
        Dpid core = static_cast<Dpid>(a * half + j + 1);
        spec.links.push_back({{agg(p, a), port(half + 1 + j)}, {core, port(1 + p)}});
      }
    }
  }
  spec.validate();
  return spec;
}

/// Chain s1 - s2 - ... - sn. With one switch both hosts share it (ports 1
/// and 2); otherwise s1 port 1 faces h1, sn port 2 faces h2, and port 2 of
/// s_i links to port 1 of s_{i+1}.
inline NetworkSpec build_linear(int n_switches, bool hosts_at_ends = true) {
  if (n_switches < 1) {
    throw TopologyError("linear topology needs at least one switch");
  }
  NetworkSpec spec;
  for (int i = 1; i <= n_switches; ++i) spec.switches.push_back({static_cast<Dpid>(i), 2});
  for (int i = 1; i < n_switches; ++i) {
    spec.links.push_back({{static_cast<Dpid>(i), 2}, {static_cast<Dpid>(i + 1), 1}});
  }
  if (hosts_at_ends) {
    spec.hosts.push_back({1, host_mac(1), {1, 1}});
    spec.hosts.push_back({2, host_mac(2), {static_cast<Dpid>(n_switches), 2}});
  }
  spec.validate();
  return spec;
}

/// Parses "linear:N" or "fattree:K".
inline NetworkSpec build_topology(const std::string& desc) {
  auto colon = desc.find(':');
  if (colon == std::string::npos) throw TopologyError("topology must be kind:size, got " + desc);
  auto kind = desc.substr(0, colon);
  int size = 0;
  try {
    size = std::stoi(desc.substr(colon + 1));
  } catch (const std::exception&) {
    throw TopologyError("bad topology size in " + desc);
  }
  if (kind == "linear") return build_linear(size);
  if (kind == "fattree" || kind == "fat-tree") return build_fat_tree(size);
  throw TopologyError("unknown topology kind " + kind);
}

}  // namespace dsdn::netsim
