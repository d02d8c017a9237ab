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

// The seam between switches and the controller core. Both directions carry
// encoded SbMessages.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsdn/wire/types.hpp"

namespace dsdn {

/// Result of a synchronous FlowMod.
struct ControlReply {
  bool ok = false;
  std::optional<FlowRule> rule;      // the rule as it now sits in the table (ADD/MODIFY) or was removed
  std::optional<FlowRule> replaced;  // ADD displaced a rule with identical priority and match
  std::string error;
};

/// Controller-to-switch half of a connection.
class SwitchChannel {
 public:
  virtual ~SwitchChannel() = default;

  /// Asynchronous delivery (PacketOut).
  virtual void send(std::vector<uint8_t> sb_message) = 0;

  /// Applies a FlowMod and waits for the switch to acknowledge it.
  virtual ControlReply request(std::vector<uint8_t> sb_message) = 0;

  /// Flow statistics: the current table with live counters.
  virtual std::vector<FlowRule> dump_flows() = 0;
};

/// Switch-to-controller half of a connection.
class SouthboundListener {
 public:
  virtual ~SouthboundListener() = default;

  /// First contact; `hello` is an encoded Hello.
  virtual void on_switch_connected(std::vector<uint8_t> hello,
                                   std::shared_ptr<SwitchChannel> channel) = 0;

  /// Any later message (PacketIn, PortStatus, FlowMod REMOVE for expiry).
  /// Must not block.
  virtual void on_switch_message(Dpid dpid, std::vector<uint8_t> sb_message) = 0;

  virtual void on_switch_disconnected(Dpid dpid) = 0;
};

}  // namespace dsdn
