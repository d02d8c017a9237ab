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

// The controller core: switch registry, event emission and the packet-return
// and flow-programming calls used by applications.

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsdn/southbound.hpp"
#include "dsdn/util/actor.hpp"
#include "dsdn/wire/codec.hpp"

namespace dsdn::core {

enum class Mode { Internal, P2p, Broker };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Internal: return "internal";
    case Mode::P2p: return "p2p";
    case Mode::Broker: return "broker";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "internal") return Mode::Internal;
  if (s == "p2p") return Mode::P2p;
  if (s == "broker") return Mode::Broker;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

enum class CoreErrc { unknown_dpid, unknown_port, unknown_rule, invalid_request, switch_error };

class CoreError : public std::runtime_error {
 public:
  CoreError(CoreErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CoreErrc code() const { return code_; }

 private:
  CoreErrc code_;
};

struct FlowModRequest {
  Dpid dpid = 0;
  FlowModOp op = FlowModOp::Add;
  RuleId rule_id = 0;  // MODIFY and REMOVE only; ADD assigns one
  uint16_t priority = 0;
  Match match;
  std::vector<Action> actions;
  uint32_t hard_timeout_s = 0;
};

struct SwitchInfo {
  Dpid dpid = 0;
  std::vector<PortNo> ports;
};

/// What applications may ask of the core. Implemented by Core itself and by
/// the socket client in dist/remote.hpp.
class CoreApi {
 public:
  virtual ~CoreApi() = default;
  virtual void packet_out(Dpid dpid, PortNo port, const Frame& frame) = 0;
  virtual RuleId flow_mod(const FlowModRequest& req) = 0;
  virtual std::vector<SwitchInfo> switches() = 0;
  virtual std::vector<FlowRule> flows(Dpid dpid) = 0;
  /// Topology services report link changes; the core turns them into events.
  virtual void report_link(const TopologyLink& link) = 0;
};

/// Outbound event distribution (P2P hub or broker). Called with the
/// emission lock held, in seq order. Returning false counts a drop.
class EventBackend {
 public:
  virtual ~EventBackend() = default;
  virtual bool publish(const Event& event, const std::vector<uint8_t>& encoded) = 0;
};

/// The compiled-in application of INTERNAL mode.
class EventHandler {
 public:
  virtual ~EventHandler() = default;
  virtual void on_event(const Event& event) = 0;
};

struct CoreMetrics {
  uint64_t events_raised = 0;
  uint64_t events_dropped = 0;
  uint64_t packet_ins = 0;
  uint64_t packet_outs = 0;
  uint64_t flow_mods = 0;
  uint64_t flow_mod_errors = 0;
};

class Core final : public CoreApi, public SouthboundListener {
 public:
  explicit Core(Mode mode) : mode_(mode) {}
  ~Core() override { stop(); }

  Core(const Core&) = delete;
  Core& operator=(const Core&) = delete;

  Mode mode() const { return mode_; }

  void set_backend(EventBackend* backend) { backend_.store(backend); }
  void set_internal_app(EventHandler* app) { app_.store(app); }

  void attach_switch(const Hello& hello, std::shared_ptr<SwitchChannel> channel) {
    {
      std::unique_lock lock(reg_mu_);
      if (switches_.contains(hello.dpid)) {
        throw CoreError(CoreErrc::invalid_request, "dpid " + std::to_string(hello.dpid) +
                                                       " already attached");
      }
      auto entry = std::make_shared<SwitchEntry>();
      entry->ports = hello.ports;
      entry->channel = std::move(channel);
      entry->handler = std::make_unique<ActorThread>("core-sw-" + std::to_string(hello.dpid));
      switches_.emplace(hello.dpid, std::move(entry));
    }
    raise_event(TopologyDevice{hello.dpid, true});
    for (auto p : hello.ports) raise_event(TopologyPort{hello.dpid, p, true});
  }

  void detach_switch(Dpid dpid) {
    std::shared_ptr<SwitchEntry> entry;
    {
      std::unique_lock lock(reg_mu_);
      auto it = switches_.find(dpid);
      if (it == switches_.end()) {
        throw CoreError(CoreErrc::unknown_dpid, "dpid " + std::to_string(dpid) + " not attached");
      }
      entry = std::move(it->second);
      switches_.erase(it);
    }
    entry->handler->stop();
    {
      std::lock_guard lock(rules_mu_);
      std::erase_if(rule_index_, [&](const auto& kv) { return kv.second == dpid; });
    }
    raise_event(TopologyDevice{dpid, false});
  }

  /// Stamps, records and distributes an event. Returns it as emitted.
  Event raise_event(EventBody body) {
    Event event;
    {
      std::lock_guard lock(emit_mu_);
      event.seq = next_seq_++;
      event.ts_micros = now_micros();
      event.body = std::move(body);
      log_.push_back(event);
      ++events_raised_;
      if (mode_ != Mode::Internal) {
        bool ok = false;
        if (auto* backend = backend_.load()) {
          try {
            ok = backend->publish(event, wire::encode_event(event));
          } catch (const std::exception&) {
            ok = false;
          }
        }
        if (!ok) ++events_dropped_;
      }
    }
    if (mode_ == Mode::Internal) {
      if (auto* app = app_.load()) app->on_event(event);
    }
    return event;
  }

  // SouthboundListener

  void on_switch_connected(std::vector<uint8_t> hello,
                           std::shared_ptr<SwitchChannel> channel) override {
    auto msg = wire::decode_sb(hello);
    auto* h = std::get_if<Hello>(&msg);
    if (!h) throw CoreError(CoreErrc::invalid_request, "first switch message must be Hello");
    attach_switch(*h, std::move(channel));
  }

  void on_switch_message(Dpid dpid, std::vector<uint8_t> sb_message) override {
    auto entry = find(dpid);
    if (!entry) return;
    entry->handler->post([this, dpid, bytes = std::move(sb_message)] { handle(dpid, bytes); });
  }

  void on_switch_disconnected(Dpid dpid) override { detach_switch(dpid); }

  // CoreApi

  void packet_out(Dpid dpid, PortNo port, const Frame& frame) override {
    auto entry = require(dpid);
    if (port != kFloodPort &&
        std::find(entry->ports.begin(), entry->ports.end(), port) == entry->ports.end()) {
      throw CoreError(CoreErrc::unknown_port,
                      "dpid " + std::to_string(dpid) + " has no port " + std::to_string(port));
    }
    ++packet_outs_;
    entry->channel->send(wire::encode_sb(PacketOut{dpid, port, frame}));
  }

  RuleId flow_mod(const FlowModRequest& req) override {
    try {
      return apply_flow_mod(req);
    } catch (...) {
      ++flow_mod_errors_;
      throw;
    }
  }

  std::vector<SwitchInfo> switches() override {
    std::shared_lock lock(reg_mu_);
    std::vector<SwitchInfo> out;
    for (const auto& [dpid, e] : switches_) out.push_back({dpid, e->ports});
    return out;
  }

  std::vector<FlowRule> flows(Dpid dpid) override { return require(dpid)->channel->dump_flows(); }

  void report_link(const TopologyLink& link) override { raise_event(link); }

  // Introspection

  std::vector<Event> event_log() const {
    std::lock_guard lock(emit_mu_);
    return log_;
  }

  std::size_t event_log_size() const {
    std::lock_guard lock(emit_mu_);
    return log_.size();
  }

  void clear_event_log() {
    std::lock_guard lock(emit_mu_);
    log_.clear();
  }

  CoreMetrics metrics() const {
    CoreMetrics m;
    m.events_raised = events_raised_.load();
    m.events_dropped = events_dropped_.load();
    m.packet_ins = packet_ins_.load();
    m.packet_outs = packet_outs_.load();
    m.flow_mods = flow_mods_.load();
    m.flow_mod_errors = flow_mod_errors_.load();
    return m;
  }

  /// True when no southbound message is waiting in a handler.
  bool idle() const {
    std::shared_lock lock(reg_mu_);
    for (const auto& [d, e] : switches_) {
      if (!e->handler->idle()) return false;
    }
    return true;
  }

  void stop() {
    std::shared_lock lock(reg_mu_);
    for (auto& [d, e] : switches_) e->handler->stop();
  }

 private:
  struct SwitchEntry {
    std::vector<PortNo> ports;
    std::shared_ptr<SwitchChannel> channel;
    std::unique_ptr<ActorThread> handler;
  };

  std::shared_ptr<SwitchEntry> find(Dpid dpid) const {
    std::shared_lock lock(reg_mu_);
    auto it = switches_.find(dpid);
    return it == switches_.end() ? nullptr : it->second;
  }

  std::shared_ptr<SwitchEntry> require(Dpid dpid) const {
    auto e = find(dpid);
    if (!e) throw CoreError(CoreErrc::unknown_dpid, "unknown dpid " + std::to_string(dpid));
    return e;
  }

  void handle(Dpid dpid, const std::vector<uint8_t>& bytes) {
    auto msg = wire::decode_sb(bytes);
    if (auto* in = std::get_if<PacketIn>(&msg)) {
      ++packet_ins_;
      raise_event(PacketException{dpid, in->in_port, std::move(in->frame)});
    } else if (auto* ps = std::get_if<PortStatus>(&msg)) {
      raise_event(TopologyPort{dpid, ps->port, ps->up});
    } else if (auto* mod = std::get_if<FlowMod>(&msg)) {
      if (mod->op != FlowModOp::Remove) return;
      forget_rule(mod->rule.rule_id);
      raise_event(FlowRuleEvent{FlowRuleOp::Removed, dpid, std::move(mod->rule)});
    }
  }

  void forget_rule(RuleId id) {
    std::lock_guard lock(rules_mu_);
    rule_index_.erase(id);
  }

  RuleId apply_flow_mod(const FlowModRequest& req) {
    auto entry = require(req.dpid);
    for (const auto& a : req.actions) {
      if (a.kind == Action::Kind::Output &&
          std::find(entry->ports.begin(), entry->ports.end(), a.port) == entry->ports.end()) {
        throw CoreError(CoreErrc::unknown_port, "OUTPUT to missing port " + std::to_string(a.port));
      }
    }

    FlowRule rule;
    rule.priority = req.priority;
    rule.match = req.match;
    rule.actions = req.actions;
    rule.hard_timeout_s = req.hard_timeout_s;
    if (req.op == FlowModOp::Add) {
      rule.rule_id = next_rule_id_++;
    } else {
      std::lock_guard lock(rules_mu_);
      auto it = rule_index_.find(req.rule_id);
      if (it == rule_index_.end() || it->second != req.dpid) {
        throw CoreError(CoreErrc::unknown_rule, "no rule " + std::to_string(req.rule_id) +
                                                    " on dpid " + std::to_string(req.dpid));
      }
      rule.rule_id = req.rule_id;
    }

    ++flow_mods_;
    auto reply = entry->channel->request(wire::encode_sb(FlowMod{req.dpid, req.op, rule}));
    if (!reply.ok || !reply.rule) {
      if (req.op != FlowModOp::Add) forget_rule(req.rule_id);
      throw CoreError(req.op == FlowModOp::Add ? CoreErrc::switch_error : CoreErrc::unknown_rule,
                      reply.error);
    }

    switch (req.op) {
      case FlowModOp::Add:
        if (reply.replaced) {
          forget_rule(reply.replaced->rule_id);
          raise_event(FlowRuleEvent{FlowRuleOp::Removed, req.dpid, *reply.replaced});
        }
        {
          std::lock_guard lock(rules_mu_);
          rule_index_[rule.rule_id] = req.dpid;
        }
        raise_event(FlowRuleEvent{FlowRuleOp::Added, req.dpid, *reply.rule});
        break;
      case FlowModOp::Modify:
        raise_event(FlowRuleEvent{FlowRuleOp::Updated, req.dpid, *reply.rule});
        break;
      case FlowModOp::Remove:
        forget_rule(rule.rule_id);
        raise_event(FlowRuleEvent{FlowRuleOp::Removed, req.dpid, *reply.rule});
        break;
    }
    return rule.rule_id;
  }

  const Mode mode_;
  std::atomic<EventBackend*> backend_{nullptr};
  std::atomic<EventHandler*> app_{nullptr};

  mutable std::shared_mutex reg_mu_;
  std::map<Dpid, std::shared_ptr<SwitchEntry>> switches_;

  mutable std::mutex emit_mu_;
  uint64_t next_seq_ = 1;
  std::vector<Event> log_;

  std::mutex rules_mu_;
  std::map<RuleId, Dpid> rule_index_;
  std::atomic<RuleId> next_rule_id_{1};

  std::atomic<uint64_t> events_raised_{0};
  std::atomic<uint64_t> events_dropped_{0};
  std::atomic<uint64_t> packet_ins_{0};
  std::atomic<uint64_t> packet_outs_{0};
  std::atomic<uint64_t> flow_mods_{0};
  std::atomic<uint64_t> flow_mod_errors_{0};
};

}  // namespace dsdn::core
