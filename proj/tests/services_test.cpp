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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "dsdn/netsim/host_proto.hpp"
#include "dsdn/services/testbed.hpp"
#include "support/oracles.hpp"

namespace dsdn {
namespace {

using core::Mode;
using netsim::NetworkSpec;
using services::Forwarder;
using services::FwdConfig;
using services::Hop;
using services::PathErrc;
using services::PathError;
using services::Testbed;
using services::TestbedConfig;
using services::TopologyGraph;

/// Graph with every link and host of `spec` already known.
TopologyGraph graph_of(const NetworkSpec& spec) {
  TopologyGraph g;
  for (const auto& s : spec.switches) g.add_switch(s.dpid);
  for (const auto& [a, b] : spec.directed_links()) g.observe_link(a, b, 1);
  for (const auto& h : spec.hosts) g.learn_host(h.mac, h.attachment);
  return g;
}

std::map<Dpid, std::set<Dpid>> adjacency(const NetworkSpec& spec) {
  std::map<Dpid, std::set<Dpid>> adj;
  for (const auto& l : spec.links) {
    adj[l.a.dpid].insert(l.b.dpid);
    adj[l.b.dpid].insert(l.a.dpid);
  }
  return adj;
}

/// Records what forwarding asks of the core.
class RecordingCore final : public core::CoreApi {
 public:
  struct Out {
    Dpid dpid;
    PortNo port;
    Frame frame;
  };

  void packet_out(Dpid dpid, PortNo port, const Frame& frame) override { outs.push_back({dpid, port, frame}); }
  RuleId flow_mod(const core::FlowModRequest& req) override {
    mods.push_back(req);
    return mods.size();
  }
  std::vector<core::SwitchInfo> switches() override { return sw; }
  std::vector<FlowRule> flows(Dpid) override { return {}; }
  void report_link(const TopologyLink& l) override { links.push_back(l); }

  std::vector<core::SwitchInfo> sw;
  std::vector<Out> outs;
  std::vector<core::FlowModRequest> mods;
  std::vector<TopologyLink> links;
};

/// TopologyQuery over a fixed graph.
class GraphQuery final : public services::TopologyQuery {
 public:
  explicit GraphQuery(TopologyGraph g) : g_(std::move(g)) {}
  std::vector<Hop> path_from(Dpid dpid, PortNo in_port, MacAddr dst) override {
    return g_.path_from(dpid, in_port, dst);
  }
  void learn_host(MacAddr mac, Dpid dpid, PortNo port) override { g_.learn_host(mac, {dpid, port}); }

 private:
  TopologyGraph g_;
};

Frame data_frame(MacAddr dst, MacAddr src, uint8_t tag = 0) {
  std::vector<uint8_t> body{tag, 1, 2, 3};
  return netsim::make_raw(dst, src, body);
}

std::size_t count_data_packet_events(const std::vector<Event>& log, MacAddr dst) {
  std::size_t n = 0;
  for (const auto& e : log) {
    auto* pe = e.as<PacketException>();
    if (pe && pe->frame.ethertype == kEthData && pe->frame.dst == dst) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Path computation

TEST(Path, HopCountMatchesBfsOnFatTree) {
  auto spec = netsim::build_fat_tree(4);
  auto g = graph_of(spec);
  auto adj = adjacency(spec);
  int pairs = 0;
  for (std::size_t i = 0; i < spec.hosts.size(); ++i) {
    auto dist = testing::bfs_hops(adj, spec.hosts[i].attachment.dpid);
    for (std::size_t j = i + 1; j < spec.hosts.size(); ++j) {
      const auto& a = spec.hosts[i];
      const auto& b = spec.hosts[j];
      auto path = g.shortest_path(a.mac, b.mac);
      ASSERT_EQ(static_cast<int>(path.size()) - 1, dist.at(b.attachment.dpid));
      // the path is walkable: each hop's egress is linked to the next ingress
      auto links = spec.directed_links();
      for (std::size_t h = 0; h + 1 < path.size(); ++h) {
        ASSERT_TRUE(links.contains({{path[h].dpid, path[h].out_port}, {path[h + 1].dpid, path[h + 1].in_port}}));
      }
      EXPECT_EQ(path.front().in_port, a.attachment.port);
      EXPECT_EQ(path.back().out_port, b.attachment.port);
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 120);
}

TEST(Path, TieBreaksOnSmallestNextHop) {
  // diamond 1 -> {3, 2} -> 4, with 3 on the lower port of switch 1
  NetworkSpec spec;
  spec.switches = {{1, 3}, {2, 3}, {3, 3}, {4, 3}};
  spec.links = {{{1, 1}, {3, 1}}, {{1, 2}, {2, 1}}, {{3, 2}, {4, 1}}, {{2, 2}, {4, 2}}};
  spec.hosts = {{1, host_mac(1), {1, 3}}, {2, host_mac(2), {4, 3}}};
  auto g = graph_of(spec);
  auto path = g.shortest_path(host_mac(1), host_mac(2));
  ASSERT_EQ(path.size(), 3u);
  EXPECT_EQ(path[1].dpid, 2u);
  EXPECT_EQ(path[0].out_port, 2);
}

TEST(Path, SameSwitchIsSingleHop) {
  auto spec = netsim::build_linear(1);
  auto g = graph_of(spec);
  auto path = g.shortest_path(host_mac(1), host_mac(2));
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0], (Hop{1, 1, 2}));
}

TEST(Path, Errors) {
  auto spec = netsim::build_linear(3);
  auto g = graph_of(spec);
  try {
    g.shortest_path(host_mac(1), host_mac(9));
    FAIL();
  } catch (const PathError& e) {
    EXPECT_EQ(e.code(), PathErrc::no_location);
  }
  g.remove_port_links({2, 2});
  try {
    g.shortest_path(host_mac(1), host_mac(2));
    FAIL();
  } catch (const PathError& e) {
    EXPECT_EQ(e.code(), PathErrc::no_path);
  }
}

// ---------------------------------------------------------------------------
// Graph maintenance

TEST(Graph, StaleLinksAgeOut) {
  TopologyGraph g;
  g.add_switch(1);
  g.add_switch(2);
  EXPECT_TRUE(g.observe_link({1, 1}, {2, 1}, 1));
  EXPECT_FALSE(g.observe_link({1, 1}, {2, 1}, 2));
  EXPECT_TRUE(g.expire_links(5, 3).empty());
  auto gone = g.expire_links(6, 3);
  ASSERT_EQ(gone.size(), 1u);
  EXPECT_TRUE(g.links().empty());
}

TEST(Graph, HostsOnlyLearnedAtEdgePorts) {
  TopologyGraph g;
  g.add_switch(1);
  g.add_switch(2);
  g.observe_link({1, 2}, {2, 1}, 1);
  auto mac = host_mac(7);
  EXPECT_FALSE(g.learn_host(mac, {2, 1}));
  EXPECT_FALSE(g.learn_host(mac, {1, 2}));
  EXPECT_FALSE(g.learn_host(mac, {9, 1}));
  EXPECT_TRUE(g.learn_host(mac, {1, 1}));
  EXPECT_FALSE(g.learn_host(mac, {1, 1}));
  // moving to another edge port re-learns
  EXPECT_TRUE(g.learn_host(mac, {2, 2}));
  EXPECT_EQ(*g.host(mac), (netsim::PortRef{2, 2}));
}

TEST(TopologyService, DiscoveryFramesBuildLinks) {
  RecordingCore rc;
  rc.sw = {{1, {1, 2}}, {2, {1, 2}}};
  services::TopologyService topo(rc);
  ASSERT_TRUE(topo.discovery_round());
  ASSERT_EQ(rc.outs.size(), 4u);
  // deliver s1:2's frame to s2:1 and vice versa
  for (const auto& o : rc.outs) {
    auto p = services::parse_discovery(o.frame);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->origin_dpid, o.dpid);
    EXPECT_EQ(p->origin_port, o.port);
    EXPECT_EQ(p->round, 1u);
    if (o.dpid == 1 && o.port == 2) topo.on_event(Event{1, 0, PacketException{2, 1, o.frame}});
    if (o.dpid == 2 && o.port == 1) topo.on_event(Event{2, 0, PacketException{1, 2, o.frame}});
  }
  EXPECT_EQ(topo.links().size(), 2u);
  ASSERT_EQ(rc.links.size(), 2u);
  EXPECT_TRUE(rc.links[0].up);

  Frame bad = services::make_discovery({1, 2, 1});
  bad.payload.pop_back();
  topo.on_event(Event{3, 0, PacketException{2, 1, bad}});
  EXPECT_EQ(topo.malformed_discovery(), 1u);

  // no further sightings: after enough rounds both links go, and are reported
  for (int i = 0; i < 4; ++i) topo.discovery_round();
  EXPECT_TRUE(topo.links().empty());
  ASSERT_EQ(rc.links.size(), 4u);
  EXPECT_FALSE(rc.links[3].up);
}

// ---------------------------------------------------------------------------
// Forwarding decisions

TEST(Forwarder, InstallModeAddsRulePerHopThenOnePacketOut) {
  auto spec = netsim::build_linear(3);
  RecordingCore rc;
  GraphQuery q(graph_of(spec));
  services::DirectInstaller inst(rc);
  Forwarder fwd(FwdConfig{true, 10, 100, services::InstallChannel::Direct}, rc, q, &inst);
  auto h1 = host_mac(1), h2 = host_mac(2);
  fwd.on_packet({1, 1, data_frame(h2, h1)});
  ASSERT_EQ(rc.mods.size(), 3u);
  std::set<Dpid> dpids;
  for (const auto& m : rc.mods) {
    EXPECT_EQ(m.op, FlowModOp::Add);
    EXPECT_EQ(m.hard_timeout_s, 10u);
    EXPECT_EQ(m.match.eth_dst, h2);
    ASSERT_EQ(m.actions.size(), 1u);
    EXPECT_EQ(m.actions[0].kind, Action::Kind::Output);
    dpids.insert(m.dpid);
  }
  EXPECT_EQ(dpids, (std::set<Dpid>{1, 2, 3}));
  ASSERT_EQ(rc.outs.size(), 1u);
  EXPECT_EQ(rc.outs[0].dpid, 1u);
  EXPECT_EQ(rc.outs[0].port, 2);
}

TEST(Forwarder, PacketOutOnlyNeverInstalls) {
  auto spec = netsim::build_linear(3);
  RecordingCore rc;
  GraphQuery q(graph_of(spec));
  Forwarder fwd(FwdConfig{}, rc, q, nullptr);
  fwd.on_packet({2, 1, data_frame(host_mac(2), host_mac(1))});
  EXPECT_TRUE(rc.mods.empty());
  ASSERT_EQ(rc.outs.size(), 1u);
  EXPECT_EQ(rc.outs[0].dpid, 2u);
  EXPECT_EQ(rc.outs[0].port, 2);
}

TEST(Forwarder, BroadcastFloodsOnceWithoutRules) {
  auto spec = netsim::build_linear(3);
  RecordingCore rc;
  GraphQuery q(graph_of(spec));
  services::DirectInstaller inst(rc);
  Forwarder fwd(FwdConfig{true, 10, 100, services::InstallChannel::Direct}, rc, q, &inst);
  auto f = data_frame(MacAddr::broadcast(), host_mac(1));
  fwd.on_packet({1, 1, f});
  fwd.on_packet({1, 2, f});  // the same frame coming back
  fwd.on_packet({2, 1, f});
  EXPECT_TRUE(rc.mods.empty());
  ASSERT_EQ(rc.outs.size(), 2u);
  EXPECT_EQ(rc.outs[0].port, kFloodPort);
  EXPECT_EQ(rc.outs[1].dpid, 2u);
  EXPECT_EQ(fwd.stats().floods_suppressed, 1u);
}

TEST(Forwarder, UnknownDestinationFloodsAndDiscoveryIsIgnored) {
  auto spec = netsim::build_linear(2);
  RecordingCore rc;
  GraphQuery q(graph_of(spec));
  Forwarder fwd(FwdConfig{}, rc, q, nullptr);
  fwd.on_packet({1, 1, data_frame(host_mac(42), host_mac(1))});
  ASSERT_EQ(rc.outs.size(), 1u);
  EXPECT_EQ(rc.outs[0].port, kFloodPort);
  EXPECT_EQ(fwd.stats().path_errors, 1u);
  fwd.on_packet({1, 2, services::make_discovery({2, 1, 1})});
  EXPECT_EQ(rc.outs.size(), 1u);
}

TEST(FloodGuard, AdmitsAgainAfterTtl) {
  services::FloodGuard g(std::chrono::milliseconds(500));
  auto f = data_frame(MacAddr::broadcast(), host_mac(1));
  auto t0 = Clock::now();
  EXPECT_TRUE(g.admit(1, f, t0));
  EXPECT_FALSE(g.admit(1, f, t0 + std::chrono::milliseconds(100)));
  EXPECT_TRUE(g.admit(2, f, t0 + std::chrono::milliseconds(100)));
  EXPECT_TRUE(g.admit(1, f, t0 + std::chrono::milliseconds(700)));
}

// ---------------------------------------------------------------------------
// Whole control plane

TestbedConfig config(Mode mode, NetworkSpec spec, services::Transport t = services::Transport::InProc) {
  TestbedConfig c;
  c.mode = mode;
  c.network = std::move(spec);
  c.transport = t;
  return c;
}

class Discovery : public ::testing::TestWithParam<std::string> {};

TEST_P(Discovery, LearnsExactLinksAndHosts) {
  auto spec = netsim::build_topology(GetParam());
  Testbed tb(config(Mode::Internal, spec));
  tb.discovery_round();
  tb.discovery_round();
  EXPECT_EQ(tb.topology().links(), spec.directed_links());
  for (auto* h : tb.fabric().hosts()) {
    h->announce();
    tb.settle();
  }
  auto hosts = tb.topology().hosts();
  ASSERT_EQ(hosts.size(), spec.hosts.size());
  for (const auto& h : spec.hosts) EXPECT_EQ(hosts.at(h.mac), h.attachment);
}

INSTANTIATE_TEST_SUITE_P(Topologies, Discovery, ::testing::Values("linear:5", "fattree:2", "fattree:4"),
                         [](const auto& info) {
                           auto s = info.param;
                           s.erase(std::remove(s.begin(), s.end(), ':'), s.end());
                           return s;
                         });

TEST(Testbed, FirstPingPacketOutOnlyTakesOneEventPerSwitch) {
  Testbed tb(config(Mode::Internal, netsim::build_linear(5)));
  tb.warm_up();
  tb.core().clear_event_log();
  auto& h1 = tb.fabric().host(1);
  auto& h2 = tb.fabric().host(2);
  auto samples = h1.ping(h2.mac(), {});
  ASSERT_FALSE(samples[0].lost);
  tb.settle();
  auto log = tb.core().event_log();
  EXPECT_EQ(count_data_packet_events(log, h2.mac()), 5u);
  EXPECT_EQ(count_data_packet_events(log, h1.mac()), 5u);
  EXPECT_EQ(tb.core().metrics().flow_mods, 0u);
}

TEST(Testbed, InstallModeCarriesLaterPingsInTheDataPlane) {
  auto c = config(Mode::Internal, netsim::build_linear(3));
  c.fwd.install_rules = true;
  Testbed tb(c);
  tb.warm_up();
  tb.core().clear_event_log();
  auto& h1 = tb.fabric().host(1);
  auto& h2 = tb.fabric().host(2);
  netsim::PingOptions po;
  po.count = 3;
  for (const auto& s : h1.ping(h2.mac(), po)) EXPECT_FALSE(s.lost);
  tb.settle();
  auto log = tb.core().event_log();
  // only the first request and the first reply reach the controller
  EXPECT_EQ(count_data_packet_events(log, h2.mac()), 1u);
  EXPECT_EQ(count_data_packet_events(log, h1.mac()), 1u);
  int added_to_h2 = 0;
  for (const auto& e : log) {
    auto* fr = e.as<FlowRuleEvent>();
    if (fr && fr->op == FlowRuleOp::Added && fr->rule.match.eth_dst == h2.mac()) {
      ++added_to_h2;
      EXPECT_EQ(fr->rule.hard_timeout_s, 10u);
    }
  }
  EXPECT_EQ(added_to_h2, 3);
}

struct ModeCase {
  Mode mode;
  services::Transport transport;
  bool install;
};

class EndToEnd : public ::testing::TestWithParam<ModeCase> {};

TEST_P(EndToEnd, PingsOnFatTree) {
  auto p = GetParam();
  auto c = config(p.mode, netsim::build_fat_tree(2), p.transport);
  c.fwd.install_rules = p.install;
  Testbed tb(c);
  tb.warm_up();
  auto hosts = tb.fabric().hosts();
  netsim::PingOptions po;
  po.count = 2;
  for (auto* a : hosts) {
    for (auto* b : hosts) {
      if (a == b) continue;
      for (const auto& s : a->ping(b->mac(), po)) EXPECT_FALSE(s.lost);
    }
  }
  tb.settle();
  for (auto* h : hosts) EXPECT_EQ(h->misdelivered_count(), 0u);
  EXPECT_EQ(tb.core().metrics().events_dropped, 0u);
  for (const auto& r : tb.runners()) EXPECT_EQ(r->handler_errors(), 0u);
}

INSTANTIATE_TEST_SUITE_P(
    Modes, EndToEnd,
    ::testing::Values(ModeCase{Mode::Internal, services::Transport::InProc, false},
                      ModeCase{Mode::P2p, services::Transport::InProc, false},
                      ModeCase{Mode::Broker, services::Transport::InProc, false},
                      ModeCase{Mode::P2p, services::Transport::Socket, true},
                      ModeCase{Mode::Broker, services::Transport::Socket, true}),
    [](const auto& info) {
      const auto& p = info.param;
      return std::string(core::to_string(p.mode)) + (p.transport == services::Transport::Socket ? "Socket" : "InProc") +
             (p.install ? "Install" : "PacketOut");
    });

TEST(Testbed, RestInstallMatchesDirect) {
  std::map<services::InstallChannel, std::multiset<std::pair<Dpid, PortNo>>> tables;
  for (auto ch : {services::InstallChannel::Direct, services::InstallChannel::Rest}) {
    auto c = config(Mode::P2p, netsim::build_linear(3));
    c.fwd.install_rules = true;
    c.fwd.channel = ch;
    Testbed tb(c);
    tb.warm_up();
    auto& h1 = tb.fabric().host(1);
    auto& h2 = tb.fabric().host(2);
    ASSERT_FALSE(h1.ping(h2.mac(), {})[0].lost);
    tb.settle();
    for (Dpid d = 1; d <= 3; ++d) {
      for (const auto& r : tb.fabric().flow_table(d)) tables[ch].insert({d, r.actions.at(0).port});
    }
  }
  EXPECT_EQ(tables[services::InstallChannel::Direct].size(), 6u);
  EXPECT_EQ(tables[services::InstallChannel::Direct], tables[services::InstallChannel::Rest]);
}

TEST(Testbed, BrokerServicesStartedLateReplayHistory) {
  // the broker keeps every event, so a consumer from offset 0 sees the
  // device announcements that happened before it existed
  dist::Broker broker;
  core::Core core(Mode::Broker);
  dist::BrokerBackend backend(broker);
  core.set_backend(&backend);
  netsim::Fabric fabric(netsim::build_linear(3));
  fabric.connect(core);
  while (!core.idle()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  services::BrokerSource src(broker, "late", services::kTopologyKinds, std::chrono::microseconds(1000));
  int devices = 0;
  while (auto e = src.next(std::chrono::milliseconds(50))) {
    if (e->as<TopologyDevice>()) ++devices;
  }
  EXPECT_EQ(devices, 3);
  fabric.stop();
  core.stop();
}

}  // namespace
}  // namespace dsdn
