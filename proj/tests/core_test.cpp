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

#include <set>
#include <thread>

#include "dsdn/core/rest.hpp"
#include "dsdn/netsim/fabric.hpp"

namespace dsdn::core {
namespace {

using namespace std::chrono_literals;
using netsim::Fabric;

/// A switch stand-in that records what the core sends it.
class RecordingChannel : public SwitchChannel {
 public:
  void send(std::vector<uint8_t> bytes) override {
    std::lock_guard lock(mu_);
    sent.push_back(wire::decode_sb(bytes));
  }
  ControlReply request(std::vector<uint8_t>) override { return {}; }
  std::vector<FlowRule> dump_flows() override { return {}; }

  std::mutex mu_;
  std::vector<SbMessage> sent;
};

template <class T>
std::vector<T> events_of(const Core& core) {
  std::vector<T> out;
  for (const auto& e : core.event_log()) {
    if (auto* x = e.as<T>()) out.push_back(*x);
  }
  return out;
}

void settle(Core& core, Fabric& fabric) {
  for (int stable = 0; stable < 3;) {
    std::this_thread::sleep_for(5ms);
    stable = (core.idle() && fabric.idle()) ? stable + 1 : 0;
  }
}

TEST(Core, AttachEmitsDeviceAndPorts) {
  Core core(Mode::Internal);
  core.attach_switch(Hello{1, {1, 2}}, std::make_shared<RecordingChannel>());
  auto log = core.event_log();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(*log[0].as<TopologyDevice>(), (TopologyDevice{1, true}));
  EXPECT_EQ(*log[1].as<TopologyPort>(), (TopologyPort{1, 1, true}));
  EXPECT_EQ(*log[2].as<TopologyPort>(), (TopologyPort{1, 2, true}));
  EXPECT_THROW(core.attach_switch(Hello{1, {}}, std::make_shared<RecordingChannel>()), CoreError);
}

TEST(Core, DetachAfterAttach) {
  Core core(Mode::Internal);
  core.attach_switch(Hello{4, {}}, std::make_shared<RecordingChannel>());
  core.detach_switch(4);
  auto log = core.event_log();
  ASSERT_EQ(log.size(), 2u);
  EXPECT_TRUE(log[0].as<TopologyDevice>()->up);
  EXPECT_FALSE(log[1].as<TopologyDevice>()->up);
  EXPECT_LT(log[0].seq, log[1].seq);
  try {
    core.packet_out(4, 1, Frame{});
    FAIL() << "expected unknown dpid";
  } catch (const CoreError& e) {
    EXPECT_EQ(e.code(), CoreErrc::unknown_dpid);
  }
}

TEST(Core, PacketOutValidatesPort) {
  Core core(Mode::Internal);
  auto ch = std::make_shared<RecordingChannel>();
  core.attach_switch(Hello{2, {1, 2}}, ch);
  EXPECT_THROW(core.packet_out(2, 3, Frame{}), CoreError);
  Frame f{host_mac(1), host_mac(2), kEthData, {1, 2, 3}};
  core.packet_out(2, kFloodPort, f);
  core.packet_out(2, 1, f);
  ASSERT_EQ(ch->sent.size(), 2u);
  EXPECT_EQ(std::get<PacketOut>(ch->sent[1]), (PacketOut{2, 1, f}));
}

class FailingBackend : public EventBackend {
 public:
  bool publish(const Event&, const std::vector<uint8_t>&) override {
    throw std::runtime_error("down");
  }
};

TEST(Core, BackendFailureCountsDrop) {
  Core core(Mode::Broker);
  core.raise_event(TopologyDevice{1, true});  // no backend at all
  FailingBackend failing;
  core.set_backend(&failing);
  core.raise_event(TopologyDevice{1, true});
  EXPECT_EQ(core.metrics().events_dropped, 2u);
  EXPECT_EQ(core.metrics().events_raised, 2u);
}

TEST(CoreProperty, SeqStrictlyIncreasingUnderConcurrency) {
  Core core(Mode::Internal);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&core, t] {
      for (int i = 0; i < 500; ++i) core.raise_event(TopologyPort{static_cast<Dpid>(t), 1, true});
    });
  }
  for (auto& th : threads) th.join();
  auto log = core.event_log();
  ASSERT_EQ(log.size(), 2000u);
  for (std::size_t i = 1; i < log.size(); ++i) ASSERT_LT(log[i - 1].seq, log[i].seq);
  EXPECT_EQ(log.front().seq, 1u);
  EXPECT_EQ(log.back().seq, 2000u);
}

struct Rig {
  explicit Rig(netsim::NetworkSpec spec, Mode mode = Mode::Internal)
      : core(mode), fabric(std::move(spec), {.record_host_frames = true}) {
    fabric.connect(core);
  }
  Core core;
  Fabric fabric;
};

FlowModRequest add_dst(Dpid dpid, MacAddr dst, PortNo out, uint32_t timeout = 10) {
  FlowModRequest r;
  r.dpid = dpid;
  r.priority = 100;
  r.match.eth_dst = dst;
  r.actions = {Action::output(out)};
  r.hard_timeout_s = timeout;
  return r;
}

TEST(Core, PacketInBecomesPacketException) {
  Rig rig(netsim::build_linear(1));
  auto& h1 = rig.fabric.host(1);
  std::vector<uint8_t> body{9, 8, 7};
  h1.send_raw(rig.fabric.host(2).mac(), body);
  settle(rig.core, rig.fabric);
  auto pe = events_of<PacketException>(rig.core);
  ASSERT_EQ(pe.size(), 1u);
  EXPECT_EQ(pe[0].dpid, 1u);
  EXPECT_EQ(pe[0].in_port, 1);
  EXPECT_EQ(pe[0].frame, netsim::make_raw(rig.fabric.host(2).mac(), h1.mac(), body));
}

TEST(Core, PacketOutReachesHostUnchanged) {
  Rig rig(netsim::build_linear(2));
  Frame f{rig.fabric.host(2).mac(), host_mac(77), kEthData, {0, 1, 2, 3, 4}};
  rig.core.packet_out(2, 2, f);
  settle(rig.core, rig.fabric);
  auto inbox = rig.fabric.host(2).inbox();
  ASSERT_EQ(inbox.size(), 1u);
  EXPECT_EQ(wire::encode_sb(PacketIn{0, 0, inbox[0]}), wire::encode_sb(PacketIn{0, 0, f}));
}

TEST(Core, FloodLeavesEveryUpPort) {
  Rig rig(netsim::build_linear(1));
  Frame f{MacAddr::broadcast(), host_mac(77), kEthData, {1}};
  rig.core.packet_out(1, kFloodPort, f);
  settle(rig.core, rig.fabric);
  EXPECT_EQ(rig.fabric.host(1).inbox().size(), 1u);
  EXPECT_EQ(rig.fabric.host(2).inbox().size(), 1u);
}

TEST(Core, FlowModLifecycle) {
  Rig rig(netsim::build_linear(2));
  auto dst = rig.fabric.host(2).mac();
  auto id = rig.core.flow_mod(add_dst(1, dst, 2));
  auto table = rig.fabric.flow_table(1);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].rule_id, id);
  EXPECT_EQ(table[0].hard_timeout_s, 10u);

  auto id2 = rig.core.flow_mod(add_dst(2, dst, 2));
  EXPECT_GT(id2, id);

  FlowModRequest mod = add_dst(1, dst, 1);
  mod.op = FlowModOp::Modify;
  mod.rule_id = id;
  EXPECT_EQ(rig.core.flow_mod(mod), id);
  EXPECT_EQ(rig.fabric.flow_table(1)[0].actions, std::vector<Action>{Action::output(1)});

  FlowModRequest rm;
  rm.dpid = 1;
  rm.op = FlowModOp::Remove;
  rm.rule_id = id;
  rig.core.flow_mod(rm);
  EXPECT_TRUE(rig.fabric.flow_table(1).empty());
  try {
    rig.core.flow_mod(rm);
    FAIL() << "expected unknown rule";
  } catch (const CoreError& e) {
    EXPECT_EQ(e.code(), CoreErrc::unknown_rule);
  }

  auto fre = events_of<FlowRuleEvent>(rig.core);
  ASSERT_EQ(fre.size(), 4u);
  EXPECT_EQ(fre[0].op, FlowRuleOp::Added);
  EXPECT_EQ(fre[1].op, FlowRuleOp::Added);
  EXPECT_EQ(fre[2].op, FlowRuleOp::Updated);
  EXPECT_EQ(fre[3].op, FlowRuleOp::Removed);
  EXPECT_EQ(fre[3].rule.rule_id, id);
}

TEST(Core, FlowModRejectsBadOutputPort) {
  Rig rig(netsim::build_linear(1));
  EXPECT_THROW(rig.core.flow_mod(add_dst(1, host_mac(2), 7)), CoreError);
  EXPECT_THROW(rig.core.flow_mod(add_dst(9, host_mac(2), 1)), CoreError);
  EXPECT_EQ(rig.core.metrics().flow_mod_errors, 2u);
}

TEST(Core, ReplacedRuleIsReportedRemoved) {
  Rig rig(netsim::build_linear(1));
  auto a = rig.core.flow_mod(add_dst(1, host_mac(2), 2));
  auto b = rig.core.flow_mod(add_dst(1, host_mac(2), 1));
  auto fre = events_of<FlowRuleEvent>(rig.core);
  ASSERT_EQ(fre.size(), 3u);
  EXPECT_EQ(fre[1].op, FlowRuleOp::Removed);
  EXPECT_EQ(fre[1].rule.rule_id, a);
  EXPECT_EQ(fre[2].rule.rule_id, b);
  FlowModRequest rm;
  rm.dpid = 1;
  rm.op = FlowModOp::Remove;
  rm.rule_id = a;
  EXPECT_THROW(rig.core.flow_mod(rm), CoreError);
}

TEST(Core, ExpiryRaisesRemoved) {
  Rig rig(netsim::build_linear(1));
  auto id = rig.core.flow_mod(add_dst(1, host_mac(2), 2, 1));
  std::this_thread::sleep_for(1300ms);
  settle(rig.core, rig.fabric);
  auto fre = events_of<FlowRuleEvent>(rig.core);
  ASSERT_EQ(fre.size(), 2u);
  EXPECT_EQ(fre[1].op, FlowRuleOp::Removed);
  EXPECT_EQ(fre[1].rule.rule_id, id);
  EXPECT_TRUE(rig.fabric.flow_table(1).empty());
}

TEST(Core, PortStatusBecomesTopologyPort) {
  Rig rig(netsim::build_linear(2));
  rig.core.clear_event_log();
  rig.fabric.set_link_state({1, 2}, false);
  settle(rig.core, rig.fabric);
  auto ports = events_of<TopologyPort>(rig.core);
  std::set<std::pair<Dpid, PortNo>> got;
  for (auto& p : ports) {
    EXPECT_FALSE(p.up);
    got.insert({p.dpid, p.port});
  }
  EXPECT_EQ(got, (std::set<std::pair<Dpid, PortNo>>{{1, 2}, {2, 1}}));
}

// ---------------------------------------------------------------------------
// REST

struct RestRig : Rig {
  explicit RestRig(netsim::NetworkSpec spec) : Rig(std::move(spec)), server(core, {}) {
    port = server.start();
  }
  RestServer server;
  int port = 0;
};

TEST(Rest, PostInstallsRule) {
  RestRig rig(netsim::build_linear(1));
  RestFlowClient client("127.0.0.1", rig.port);
  auto id = client.add(add_dst(1, host_mac(2), 2));
  auto table = rig.fabric.flow_table(1);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].rule_id, id);
  auto rules = client.rules(1);
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0]["rule_id"], id);
  EXPECT_EQ(rules[0]["match"]["eth_dst"], host_mac(2).to_string());
  EXPECT_EQ(rules[0]["actions"][0]["kind"], "OUTPUT");
  EXPECT_EQ(rules[0]["packet_count"], 0);
  client.remove(1, id);
  EXPECT_TRUE(rig.fabric.flow_table(1).empty());
}

TEST(Rest, StatusCodes) {
  RestRig rig(netsim::build_linear(1));
  httplib::Client cli("127.0.0.1", rig.port);
  auto post = [&](const std::string& body) { return cli.Post("/flows", body, "application/json")->status; };
  EXPECT_EQ(post(R"({"dpid":1,"priority":5,"actions":[{"kind":"DROP"}]})"), 201);
  EXPECT_EQ(post(R"({"priority": -1})"), 400);
  EXPECT_EQ(post(R"({"dpid":1,"priority":-1,"actions":[]})"), 400);
  EXPECT_EQ(post(R"({"dpid":1,"priority":70000,"actions":[]})"), 400);
  EXPECT_EQ(post("{not json"), 400);
  EXPECT_EQ(post(R"({"dpid":1,"priority":1,"match":{"eth_dst":"zz"},"actions":[]})"), 400);
  EXPECT_EQ(post(R"({"dpid":1,"priority":1,"actions":[{"kind":"TELEPORT"}]})"), 400);
  EXPECT_EQ(post(R"({"dpid":1,"priority":1,"actions":[{"kind":"OUTPUT","port":9}]})"), 400);
  EXPECT_EQ(post(R"({"dpid":42,"priority":1,"actions":[]})"), 404);
  EXPECT_EQ(cli.Delete("/flows/1/999")->status, 404);
  EXPECT_EQ(cli.Delete("/flows/42/1")->status, 404);
  EXPECT_EQ(cli.Get("/flows/42")->status, 404);
  EXPECT_EQ(cli.Get("/flows/1")->status, 200);
}

std::vector<FlowRule> normalized(std::vector<FlowRule> rules) {
  for (auto& r : rules) r.rule_id = 0;
  return rules;
}

TEST(Rest, SameStateAsDirectCall) {
  std::vector<FlowModRequest> script;
  script.push_back(add_dst(1, host_mac(2), 2));
  auto wild = add_dst(1, host_mac(1), 1, 0);
  wild.priority = 7;
  wild.match = Match{};
  wild.match.in_port = 2;
  wild.match.ethertype = kEthArp;
  wild.match.eth_src = host_mac(5);
  wild.actions = {Action::flood(), Action::controller(), Action::output(1)};
  script.push_back(wild);

  Rig direct(netsim::build_linear(1));
  for (const auto& r : script) direct.core.flow_mod(r);

  RestRig rest(netsim::build_linear(1));
  RestFlowClient client("127.0.0.1", rest.port);
  for (const auto& r : script) client.add(r);

  auto a = normalized(direct.fabric.flow_table(1));
  auto b = normalized(rest.fabric.flow_table(1));
  ASSERT_EQ(a.size(), 2u);
  std::vector<std::vector<uint8_t>> ea, eb;
  for (auto& r : a) ea.push_back(wire::encode_sb(FlowMod{1, FlowModOp::Add, r}));
  for (auto& r : b) eb.push_back(wire::encode_sb(FlowMod{1, FlowModOp::Add, r}));
  EXPECT_EQ(ea, eb);
}

TEST(Rest, ListenAddressParsing) {
  EXPECT_EQ(parse_listen_address("0.0.0.0:8181").port, 8181);
  EXPECT_EQ(parse_listen_address(":90").host, "127.0.0.1");
  EXPECT_THROW(parse_listen_address("nohost"), std::invalid_argument);
  EXPECT_THROW(parse_listen_address("h:99999"), std::invalid_argument);
  setenv(kRestListenEnv, "127.0.0.1:7001", 1);
  EXPECT_EQ(rest_listen_address().port, 7001);
  EXPECT_EQ(rest_listen_address("127.0.0.1:7002").port, 7002);
  unsetenv(kRestListenEnv);
}

}  // namespace
}  // namespace dsdn::core
