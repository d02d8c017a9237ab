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

// Brings up a simulated network with the core and both services, lets
// discovery run, pings between every pair of hosts and prints what the
// control plane saw.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dsdn/services/testbed.hpp"

int main(int argc, char** argv) {
  using namespace dsdn;
  CLI::App app{"run the control plane over a simulated network"};
  std::string mode = "internal";
  std::string install = "none";
  std::string topology = "fattree:2";
  std::string transport = "socket";
  uint32_t hard_timeout = 10;
  uint32_t pings = 3;
  long discovery_ms = 1000;
  app.add_option("--mode", mode, "event distribution")->check(CLI::IsMember({"internal", "p2p", "broker"}));
  app.add_option("--install", install, "rule install channel")->check(CLI::IsMember({"direct", "rest", "none"}));
  app.add_option("--hard-timeout-s", hard_timeout, "hard timeout of installed rules");
  app.add_option("--topology", topology, "linear:N or fattree:K");
  app.add_option("--transport", transport, "external services over inproc calls or sockets")
      ->check(CLI::IsMember({"inproc", "socket"}));
  app.add_option("--pings", pings, "pings per host pair")->check(CLI::PositiveNumber);
  app.add_option("--discovery-ms", discovery_ms, "discovery interval")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    services::TestbedConfig cfg;
    cfg.mode = core::parse_mode(mode);
    cfg.network = netsim::build_topology(topology);
    cfg.transport = transport == "socket" ? services::Transport::Socket : services::Transport::InProc;
    cfg.fwd.install_rules = install != "none";
    cfg.fwd.channel = install == "rest" ? services::InstallChannel::Rest : services::InstallChannel::Direct;
    cfg.fwd.hard_timeout_s = hard_timeout;
    cfg.discovery_interval = std::chrono::milliseconds(discovery_ms);
    services::Testbed tb(cfg);
    // the timer runs the first round at once; a second confirms every link
    std::this_thread::sleep_for(std::chrono::milliseconds(discovery_ms) + std::chrono::milliseconds(50));
    tb.settle();
    for (auto* h : tb.fabric().hosts()) {
      h->announce();
      tb.settle();
    }

    std::cout << "switches " << tb.topology().switches().size() << ", links " << tb.topology().links().size()
              << ", hosts " << tb.topology().hosts().size() << '\n';
    netsim::PingOptions po;
    po.count = pings;
    std::size_t sent = 0, lost = 0;
    uint64_t total_rtt = 0;
    for (auto* a : tb.fabric().hosts()) {
      for (auto* b : tb.fabric().hosts()) {
        if (a == b) continue;
        for (const auto& s : a->ping(b->mac(), po)) {
          ++sent;
          if (s.lost) {
            ++lost;
          } else {
            total_rtt += s.rtt_micros;
          }
        }
      }
    }
    tb.settle();
    auto m = tb.core().metrics();
    auto f = tb.forwarder().stats();
    std::cout << "pings " << sent << ", lost " << lost << ", mean rtt "
              << (sent > lost ? total_rtt / (sent - lost) : 0) << " us\n"
              << "events " << m.events_raised << " (dropped " << m.events_dropped << "), packet-outs "
              << m.packet_outs << ", flow-mods " << m.flow_mods << '\n'
              << "forwarder: directed " << f.directed << ", floods " << f.floods << ", rules " << f.flow_mods
              << '\n';
    return lost == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "dsdn-run: " << e.what() << '\n';
    return 2;
  }
}
