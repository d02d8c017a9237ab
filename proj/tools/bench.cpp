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

// bench rt --modes internal,p2p,broker --count 500 --topology linear:5 --out dir/
// bench tp --modes internal,p2p --conns 1,2,4,8 --duration 15 --install direct --out dir/
//
// Exits 0 only when every run passes its validity checks.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsdn/bench/experiments.hpp"
#include "dsdn/bench/report.hpp"

namespace {

using namespace dsdn;

std::vector<core::Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<core::Mode> out;
  for (const auto& n : names) out.push_back(core::parse_mode(n));
  return out;
}

services::Transport parse_transport(const std::string& s) {
  if (s == "inproc") return services::Transport::InProc;
  if (s == "socket") return services::Transport::Socket;
  throw std::invalid_argument("transport must be inproc or socket, got " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"control-plane distribution benchmarks"};
  app.require_subcommand(1);

  std::vector<std::string> modes{"internal", "p2p", "broker"};
  std::string topology = "linear:5";
  std::string out_dir = "bench-out";
  std::string transport = "inproc";
  long poll_us = 1000;
  long latency_us = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--modes", modes, "distribution modes")->delimiter(',');
    sub->add_option("--topology", topology, "linear:N or fattree:K");
    sub->add_option("--out", out_dir, "directory for CSV output");
    sub->add_option("--transport", transport, "how external services connect: inproc or socket");
    sub->add_option("--broker-poll-us", poll_us, "broker consumer poll interval")->check(CLI::PositiveNumber);
    sub->add_option("--link-latency-us", latency_us, "one-way latency per link")->check(CLI::NonNegativeNumber);
  };

  auto* rt = app.add_subcommand("rt", "ping response time, packet-out-only forwarding");
  common(rt);
  uint32_t count = 500;
  uint32_t warmup = 10;
  long interval_ms = 10;
  rt->add_option("--count", count, "measured pings per mode");
  rt->add_option("--warmup", warmup, "discarded pings per mode");
  rt->add_option("--interval-ms", interval_ms, "gap between pings")->check(CLI::NonNegativeNumber);

  auto* tp = app.add_subcommand("tp", "stream goodput with reactive rule installation");
  common(tp);
  std::vector<int> conns{1, 2, 4, 8};
  long duration_s = 15;
  std::string install = "direct";
  uint32_t hard_timeout = 10;
  tp->add_option("--conns", conns, "connection counts")->delimiter(',');
  tp->add_option("--duration", duration_s, "seconds per run")->check(CLI::PositiveNumber);
  tp->add_option("--install", install, "rule install channel")->check(CLI::IsMember({"direct", "rest"}));
  tp->add_option("--hard-timeout-s", hard_timeout, "hard timeout of installed rules");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rt->parsed()) {
      bench::RtConfig cfg;
      cfg.topology = topology;
      cfg.count = count;
      cfg.warmup = warmup;
      cfg.modes = parse_modes(modes);
      cfg.interval = std::chrono::milliseconds(interval_ms);
      cfg.broker_poll = std::chrono::microseconds(poll_us);
      cfg.link_latency = std::chrono::microseconds(latency_us);
      cfg.transport = parse_transport(transport);
      auto res = bench::run_response_time(cfg);
      bench::write_rt(res, out_dir);
      bench::print_rt(std::cout, res);
      return res.valid() ? 0 : 1;
    }
    bench::TpConfig cfg;
    cfg.topology = topology;
    cfg.modes = parse_modes(modes);
    cfg.conns = conns;
    cfg.duration = std::chrono::seconds(duration_s);
    cfg.channel = install == "rest" ? services::InstallChannel::Rest : services::InstallChannel::Direct;
    cfg.hard_timeout_s = hard_timeout;
    cfg.broker_poll = std::chrono::microseconds(poll_us);
    cfg.link_latency = std::chrono::microseconds(latency_us);
    cfg.transport = parse_transport(transport);
    if (auto w = cfg.churn_warning(); !w.empty()) std::cerr << "warning: " << w << '\n';
    auto res = bench::run_throughput(cfg);
    bench::write_tp(res, out_dir);
    bench::print_tp(std::cout, res);
    return res.valid() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  }
}
