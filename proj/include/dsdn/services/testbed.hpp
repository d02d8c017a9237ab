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

// A complete control plane over a simulated network in one process: fabric,
// core, distribution backend and the two services, wired for one mode.

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "dsdn/core/controller.hpp"
#include "dsdn/core/rest.hpp"
#include "dsdn/dist/broker.hpp"
#include "dsdn/dist/p2p.hpp"
#include "dsdn/dist/remote.hpp"
#include "dsdn/netsim/fabric.hpp"
#include "dsdn/services/forwarding.hpp"
#include "dsdn/services/runtime.hpp"
#include "dsdn/services/topology.hpp"

namespace dsdn::services {

/// How external services reach the core and the event backend.
enum class Transport { InProc, Socket };

struct TestbedConfig {
  core::Mode mode = core::Mode::Internal;
  netsim::NetworkSpec network;
  netsim::FabricOptions fabric{};
  FwdConfig fwd{};
  Transport transport = Transport::InProc;
  std::chrono::microseconds broker_poll{1000};
  /// Zero leaves discovery to explicit discovery_round() calls.
  std::chrono::milliseconds discovery_interval{0};
  std::size_t queue_bound = dist::kDefaultQueueBound;
};

class Testbed {
 public:
  explicit Testbed(TestbedConfig cfg) : cfg_(std::move(cfg)), core_(cfg_.mode) {
    using core::Mode;
    core::CoreApi* api = &core_;
    if (cfg_.mode == Mode::P2p) {
      hub_ = std::make_unique<dist::P2pHub>(cfg_.queue_bound);
      backend_ = std::make_unique<dist::P2pBackend>(*hub_);
    } else if (cfg_.mode == Mode::Broker) {
      broker_ = std::make_unique<dist::Broker>();
      backend_ = std::make_unique<dist::BrokerBackend>(*broker_);
    }
    if (backend_) core_.set_backend(backend_.get());

    bool external = cfg_.mode != Mode::Internal;
    if (external && cfg_.transport == Transport::Socket) {
      core_server_ = std::make_unique<dist::CoreServer>(core_);
      remote_core_ = std::make_unique<dist::RemoteCore>("127.0.0.1", core_server_->port());
      api = remote_core_.get();
      if (hub_) p2p_server_ = std::make_unique<dist::P2pServer>(*hub_);
      if (broker_) {
        broker_server_ = std::make_unique<dist::BrokerServer>(*broker_);
        remote_broker_ = std::make_unique<dist::RemoteBroker>("127.0.0.1", broker_server_->port());
      }
    }
    api_ = api;

    if (cfg_.fwd.install_rules) {
      if (cfg_.fwd.channel == InstallChannel::Rest) {
        rest_ = std::make_unique<core::RestServer>(core_, core::ListenAddress{});
        int port = rest_->start();
        installer_ = std::make_unique<RestInstaller>("127.0.0.1", port);
      } else {
        installer_ = std::make_unique<DirectInstaller>(*api_);
      }
    }
    topology_ = std::make_unique<TopologyService>(*api_);
    forwarder_ = std::make_unique<Forwarder>(cfg_.fwd, *api_, *topology_, installer_.get());

    if (!external) {
      app_ = std::make_unique<InternalApp>(*topology_, *forwarder_);
      core_.set_internal_app(app_.get());
    } else {
      auto* topo = topology_.get();
      auto* fwd = forwarder_.get();
      runners_.push_back(std::make_unique<ServiceRunner>(
          make_source("topology", kTopologyKinds), [topo](const Event& e) { topo->on_event(e); }));
      runners_.push_back(std::make_unique<ServiceRunner>(
          make_source("forwarding", kForwardingKinds), [fwd](const Event& e) { fwd->on_event(e); }));
    }

    fabric_ = std::make_unique<netsim::Fabric>(cfg_.network, cfg_.fabric);
    fabric_->connect(core_);
    if (cfg_.discovery_interval.count() > 0) {
      timer_ = std::make_unique<DiscoveryTimer>(*topology_, cfg_.discovery_interval);
    }
  }

  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  ~Testbed() { stop(); }

  void stop() {
    if (stopped_) return;
    stopped_ = true;
    if (timer_) timer_->stop();
    fabric_->stop();
    for (auto& r : runners_) r->stop();
    core_.stop();
    // nothing can forward any more; close REST keep-alive connections so
    // the server does not wait out their idle timeout
    installer_.reset();
    if (rest_) rest_->stop();
    if (core_server_) core_server_->stop();
    if (p2p_server_) p2p_server_->stop();
    if (broker_server_) broker_server_->stop();
  }

  const TestbedConfig& config() const { return cfg_; }
  core::Mode mode() const { return cfg_.mode; }
  core::Core& core() { return core_; }
  netsim::Fabric& fabric() { return *fabric_; }
  TopologyService& topology() { return *topology_; }
  Forwarder& forwarder() { return *forwarder_; }
  dist::P2pHub* hub() { return hub_.get(); }
  dist::Broker* broker() { return broker_.get(); }
  const std::vector<std::unique_ptr<ServiceRunner>>& runners() const { return runners_; }

  /// Waits until switches, hosts, core handlers and services have all been
  /// quiet for several consecutive checks.
  bool settle(std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
    auto deadline = Clock::now() + timeout;
    int quiet = 0;
    while (Clock::now() < deadline) {
      if (quiescent()) {
        if (++quiet >= 4) return true;
      } else {
        quiet = 0;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return false;
  }

  void discovery_round() {
    topology_->discovery_round();
    settle();
  }

  /// Discovery until links are known, then every host announces itself so
  /// that host locations are learned before traffic starts.
  void warm_up(int rounds = 2) {
    for (int i = 0; i < rounds; ++i) discovery_round();
    for (auto* h : fabric_->hosts()) {
      h->announce();
      settle();
    }
  }

 private:
  bool quiescent() {
    if (!fabric_->idle() || !core_.idle()) return false;
    for (auto& r : runners_) {
      if (!r->idle()) return false;
    }
    return true;
  }

  std::unique_ptr<EventSource> make_source(const std::string& name, const std::vector<EventKind>& kinds) {
    if (hub_) {
      if (p2p_server_) return std::make_unique<RemoteHubSource>("127.0.0.1", p2p_server_->port(), mask_of(kinds));
      return std::make_unique<HubSource>(*hub_, mask_of(kinds));
    }
    dist::BrokerApi& b = remote_broker_ ? static_cast<dist::BrokerApi&>(*remote_broker_) : *broker_;
    return std::make_unique<BrokerSource>(b, name, kinds, cfg_.broker_poll);
  }

  // Declaration order is teardown order in reverse: the fabric's switch
  // actors call into the core, and runners call into the services.
  TestbedConfig cfg_;
  core::Core core_;
  std::unique_ptr<dist::P2pHub> hub_;
  std::unique_ptr<dist::Broker> broker_;
  std::unique_ptr<core::EventBackend> backend_;
  std::unique_ptr<dist::CoreServer> core_server_;
  std::unique_ptr<dist::P2pServer> p2p_server_;
  std::unique_ptr<dist::BrokerServer> broker_server_;
  std::unique_ptr<dist::RemoteCore> remote_core_;
  std::unique_ptr<dist::RemoteBroker> remote_broker_;
  core::CoreApi* api_ = nullptr;
  std::unique_ptr<core::RestServer> rest_;
  std::unique_ptr<FlowInstaller> installer_;
  std::unique_ptr<TopologyService> topology_;
  std::unique_ptr<Forwarder> forwarder_;
  std::unique_ptr<InternalApp> app_;
  std::vector<std::unique_ptr<ServiceRunner>> runners_;
  std::unique_ptr<DiscoveryTimer> timer_;
  std::unique_ptr<netsim::Fabric> fabric_;
  bool stopped_ = false;
};

}  // namespace dsdn::services
