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

// Pure flow-table switch model: lookup, action application and hard-timeout
// expiry. The actor wrapper in fabric.hpp owns one SwitchState per switch.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "dsdn/wire/types.hpp"

namespace dsdn::netsim {

struct SwitchState {
  Dpid dpid = 0;
  /// Sorted by (priority desc, rule_id asc); the first match wins.
  std::vector<FlowRule> table;
  /// port -> up
  std::map<PortNo, bool> ports;
  /// OUTPUT actions that named a port the switch does not have.
  uint64_t stale_output_drops = 0;

  bool port_up(PortNo p) const {
    auto it = ports.find(p);
    return it != ports.end() && it->second;
  }
};

struct Transmit {
  PortNo port;
  Frame frame;
};
struct ToController {
  PortNo in_port;
  Frame frame;
};
struct RuleExpired {
  FlowRule rule;
};
using SwitchEffect = std::variant<Transmit, ToController, RuleExpired>;

inline bool rule_precedes(const FlowRule& a, const FlowRule& b) {
  return a.priority != b.priority ? a.priority > b.priority : a.rule_id < b.rule_id;
}

inline const FlowRule* lookup(const SwitchState& st, PortNo in_port, const Frame& frame) {
  for (const auto& rule : st.table) {
    if (rule.match.matches(in_port, frame)) return &rule;
  }
  return nullptr;
}

/// Removes every rule whose hard timeout has elapsed at `now`.
inline std::vector<FlowRule> expire_flows(SwitchState& st, TimePoint now) {
  std::vector<FlowRule> removed;
  auto keep = std::stable_partition(st.table.begin(), st.table.end(),
                                    [&](const FlowRule& r) { return !r.expired(now); });
  std::move(keep, st.table.end(), std::back_inserter(removed));
  st.table.erase(keep, st.table.end());
  return removed;
}

/// Earliest pending expiry, if any rule has a hard timeout.
inline std::optional<TimePoint> next_expiry(const SwitchState& st) {
  std::optional<TimePoint> out;
  for (const auto& r : st.table) {
    if (r.hard_timeout_s == 0) continue;
    auto at = r.installed_at + std::chrono::seconds(r.hard_timeout_s);
    if (!out || at < *out) out = at;
  }
  return out;
}

/// Inserts `rule` in table order. A rule with identical priority and match is
/// replaced and returned.
inline std::optional<FlowRule> add_rule(SwitchState& st, FlowRule rule) {
  std::optional<FlowRule> replaced;
  auto same = std::find_if(st.table.begin(), st.table.end(), [&](const FlowRule& r) {
    return r.priority == rule.priority && r.match == rule.match;
  });
  if (same != st.table.end()) {
    replaced = std::move(*same);
    st.table.erase(same);
  }
  auto pos = std::upper_bound(st.table.begin(), st.table.end(), rule, rule_precedes);
  st.table.insert(pos, std::move(rule));
  return replaced;
}

/// Rewrites priority, match, actions and timeout of an existing rule, keeping
/// its counters and install time. Returns the updated rule.
inline std::optional<FlowRule> modify_rule(SwitchState& st, const FlowRule& update) {
  auto it = std::find_if(st.table.begin(), st.table.end(),
                         [&](const FlowRule& r) { return r.rule_id == update.rule_id; });
  if (it == st.table.end()) return std::nullopt;
  FlowRule rule = std::move(*it);
  st.table.erase(it);
  rule.priority = update.priority;
  rule.match = update.match;
  rule.actions = update.actions;
  rule.hard_timeout_s = update.hard_timeout_s;
  auto pos = std::upper_bound(st.table.begin(), st.table.end(), rule, rule_precedes);
  return *st.table.insert(pos, std::move(rule));
}

inline std::optional<FlowRule> remove_rule(SwitchState& st, RuleId id) {
  auto it = std::find_if(st.table.begin(), st.table.end(),
                         [&](const FlowRule& r) { return r.rule_id == id; });
  if (it == st.table.end()) return std::nullopt;
  FlowRule rule = std::move(*it);
  st.table.erase(it);
  return rule;
}

/// Transmissions for sending `frame` out of `out_port` (or every up port
/// other than `except` for kFloodPort), without a table lookup.
inline void emit(SwitchState& st, PortNo out_port, const Frame& frame,
                 std::optional<PortNo> except, std::vector<SwitchEffect>& out) {
  if (out_port == kFloodPort) {
    for (const auto& [p, up] : st.ports) {
      if (up && p != except) out.push_back(Transmit{p, frame});
    }
    return;
  }
  if (!st.ports.contains(out_port)) {
    ++st.stale_output_drops;
    return;
  }
  if (st.port_up(out_port)) out.push_back(Transmit{out_port, frame});
}

/// Processes a frame arriving on `in_port` at time `now`.
inline std::vector<SwitchEffect> switch_rx(SwitchState& st, PortNo in_port, const Frame& frame,
                                           TimePoint now) {
  std::vector<SwitchEffect> out;
  for (auto& r : expire_flows(st, now)) out.push_back(RuleExpired{std::move(r)});
  if (!st.port_up(in_port)) return out;

  auto it = std::find_if(st.table.begin(), st.table.end(),
                         [&](const FlowRule& r) { return r.match.matches(in_port, frame); });
  if (it == st.table.end()) {
    out.push_back(ToController{in_port, frame});
    return out;
  }
  it->packet_count += 1;
  it->byte_count += frame.byte_length();
  for (const auto& action : it->actions) {
    switch (action.kind) {
      case Action::Kind::Output: emit(st, action.port, frame, std::nullopt, out); break;
      case Action::Kind::Flood: emit(st, kFloodPort, frame, in_port, out); break;
      case Action::Kind::Drop: break;
      case Action::Kind::Controller: out.push_back(ToController{in_port, frame}); break;
    }
  }
  return out;
}

}  // namespace dsdn::netsim
