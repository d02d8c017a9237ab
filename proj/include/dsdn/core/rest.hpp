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

// HTTP/JSON flow endpoint and a matching client.
//
//   POST   /flows                   -> 201 {"rule_id": n}
//   DELETE /flows/{dpid}/{rule_id}  -> 204
//   GET    /flows/{dpid}            -> 200 {"rules": [...]}

#pragma once

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dsdn/core/controller.hpp"

namespace dsdn::core {

using json = nlohmann::json;

inline constexpr const char* kRestListenEnv = "DSDN_REST_LISTEN";

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
};

/// Parses "host:port" or ":port".
inline ListenAddress parse_listen_address(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("listen address must be host:port");
  ListenAddress a;
  if (colon > 0) a.host = s.substr(0, colon);
  try {
    a.port = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in listen address: " + s);
  }
  if (a.port < 0 || a.port > 65535) throw std::invalid_argument("port out of range: " + s);
  return a;
}

/// The flag value if set, else the environment, else 127.0.0.1 on a free port.
inline ListenAddress rest_listen_address(const std::string& flag = {}) {
  if (!flag.empty()) return parse_listen_address(flag);
  if (const char* env = std::getenv(kRestListenEnv); env && *env) return parse_listen_address(env);
  return {};
}

class BadRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <class T>
T get_uint(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw BadRequest(std::string("missing field ") + key);
  if (!it->is_number_integer()) throw BadRequest(std::string(key) + " must be an integer");
  if (it->is_number_unsigned()) {
    auto v = it->get<uint64_t>();
    if (v > std::numeric_limits<T>::max()) throw BadRequest(std::string(key) + " out of range");
    return static_cast<T>(v);
  }
  auto v = it->get<int64_t>();
  if (v < 0 || static_cast<uint64_t>(v) > std::numeric_limits<T>::max()) {
    throw BadRequest(std::string(key) + " out of range");
  }
  return static_cast<T>(v);
}

inline MacAddr get_mac(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw BadRequest(std::string(key) + " must be a string");
  auto mac = MacAddr::parse(v.get<std::string>());
  if (!mac) throw BadRequest(std::string(key) + " is not a MAC address");
  return *mac;
}

inline Action::Kind parse_kind(const std::string& s) {
  if (s == "OUTPUT") return Action::Kind::Output;
  if (s == "FLOOD") return Action::Kind::Flood;
  if (s == "DROP") return Action::Kind::Drop;
  if (s == "CONTROLLER") return Action::Kind::Controller;
  throw BadRequest("unknown action kind " + s);
}

}  // namespace detail

inline json match_to_json(const Match& m) {
  json j = json::object();
  if (m.in_port) j["in_port"] = *m.in_port;
  if (m.eth_src) j["eth_src"] = m.eth_src->to_string();
  if (m.eth_dst) j["eth_dst"] = m.eth_dst->to_string();
  if (m.ethertype) j["ethertype"] = *m.ethertype;
  return j;
}

inline json actions_to_json(const std::vector<Action>& actions) {
  json arr = json::array();
  for (const auto& a : actions) {
    json j{{"kind", std::string(to_string(a.kind))}};
    if (a.kind == Action::Kind::Output) j["port"] = a.port;
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Body for POST /flows.
inline json add_request_to_json(const FlowModRequest& req) {
  return json{{"dpid", req.dpid},
              {"priority", req.priority},
              {"match", match_to_json(req.match)},
              {"actions", actions_to_json(req.actions)},
              {"hard_timeout_s", req.hard_timeout_s}};
}

inline json rule_to_json(Dpid dpid, const FlowRule& r) {
  return json{{"dpid", dpid},
              {"rule_id", r.rule_id},
              {"priority", r.priority},
              {"match", match_to_json(r.match)},
              {"actions", actions_to_json(r.actions)},
              {"hard_timeout_s", r.hard_timeout_s},
              {"packet_count", r.packet_count},
              {"byte_count", r.byte_count}};
}

/// Parses a POST /flows body. Throws BadRequest on any invalid field.
inline FlowModRequest add_request_from_json(const json& j) {
  if (!j.is_object()) throw BadRequest("body must be a JSON object");
  FlowModRequest req;
  req.op = FlowModOp::Add;
  req.dpid = detail::get_uint<Dpid>(j, "dpid");
  req.priority = detail::get_uint<uint16_t>(j, "priority");
  req.hard_timeout_s = j.contains("hard_timeout_s") ? detail::get_uint<uint32_t>(j, "hard_timeout_s") : 0;
  if (j.contains("match")) {
    const auto& m = j["match"];
    if (!m.is_object()) throw BadRequest("match must be an object");
    for (const auto& [key, v] : m.items()) {
      if (key == "in_port") {
        req.match.in_port = detail::get_uint<PortNo>(m, "in_port");
      } else if (key == "eth_src") {
        req.match.eth_src = detail::get_mac(m, "eth_src");
      } else if (key == "eth_dst") {
        req.match.eth_dst = detail::get_mac(m, "eth_dst");
      } else if (key == "ethertype") {
        req.match.ethertype = detail::get_uint<uint16_t>(m, "ethertype");
        if (!valid_ethertype(*req.match.ethertype)) throw BadRequest("unsupported ethertype");
      } else {
        throw BadRequest("unknown match field " + key);
      }
    }
  }
  auto acts = j.find("actions");
  if (acts == j.end() || !acts->is_array()) throw BadRequest("actions must be an array");
  if (acts->size() > 255) throw BadRequest("too many actions");
  for (const auto& a : *acts) {
    if (!a.is_object() || !a.contains("kind") || !a["kind"].is_string()) {
      throw BadRequest("action needs a string kind");
    }
    auto kind = detail::parse_kind(a["kind"].get<std::string>());
    switch (kind) {
      case Action::Kind::Output: req.actions.push_back(Action::output(detail::get_uint<PortNo>(a, "port"))); break;
      case Action::Kind::Flood: req.actions.push_back(Action::flood()); break;
      case Action::Kind::Drop: req.actions.push_back(Action::drop()); break;
      case Action::Kind::Controller: req.actions.push_back(Action::controller()); break;
    }
  }
  return req;
}

inline int http_status(CoreErrc code) {
  switch (code) {
    case CoreErrc::unknown_dpid:
    case CoreErrc::unknown_rule: return 404;
    case CoreErrc::unknown_port:
    case CoreErrc::invalid_request: return 400;
    case CoreErrc::switch_error: return 502;
  }
  return 500;
}

class RestServer {
 public:
  RestServer(CoreApi& core, ListenAddress addr) : core_(core), addr_(std::move(addr)) {
    // small request/response pairs; Nagle plus delayed ACK would add ~40 ms
    server_.set_tcp_nodelay(true);
    routes();
  }
  ~RestServer() { stop(); }

  RestServer(const RestServer&) = delete;
  RestServer& operator=(const RestServer&) = delete;

  /// Binds and starts serving. Returns the bound port.
  int start() {
    if (addr_.port == 0) {
      port_ = server_.bind_to_any_port(addr_.host);
    } else {
      port_ = server_.bind_to_port(addr_.host, addr_.port) ? addr_.port : -1;
    }
    if (port_ < 0) {
      throw std::runtime_error("cannot bind " + addr_.host + ":" + std::to_string(addr_.port));
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  const std::string& host() const { return addr_.host; }

 private:
  static void fail(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(json{{"error", msg}}.dump(), "application/json");
  }

  template <class Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      fail(res, 400, e.what());
    } catch (const BadRequest& e) {
      fail(res, 400, e.what());
    } catch (const CoreError& e) {
      fail(res, http_status(e.code()), e.what());
    } catch (const std::exception& e) {
      fail(res, 500, e.what());
    }
  }

  static uint64_t path_uint(const std::string& s) {
    try {
      std::size_t used = 0;
      auto v = std::stoull(s, &used);
      if (used != s.size()) throw BadRequest("bad number " + s);
      return v;
    } catch (const std::logic_error&) {
      throw BadRequest("bad number " + s);
    }
  }

  void routes() {
    server_.Post("/flows", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = json::parse(req.body);
        auto id = core_.flow_mod(add_request_from_json(body));
        res.status = 201;
        res.set_content(json{{"rule_id", id}}.dump(), "application/json");
      });
    });
    server_.Delete(R"(/flows/(\d+)/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        FlowModRequest mod;
        mod.op = FlowModOp::Remove;
        mod.dpid = path_uint(req.matches[1]);
        mod.rule_id = path_uint(req.matches[2]);
        core_.flow_mod(mod);
        res.status = 204;
      });
    });
    server_.Get(R"(/flows/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        Dpid dpid = path_uint(req.matches[1]);
        json rules = json::array();
        for (const auto& r : core_.flows(dpid)) rules.push_back(rule_to_json(dpid, r));
        res.status = 200;
        res.set_content(json{{"rules", rules}}.dump(), "application/json");
      });
    });
  }

  CoreApi& core_;
  ListenAddress addr_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

class RestError : public std::runtime_error {
 public:
  RestError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Keep-alive client for the flow endpoint. One instance per thread.
class RestFlowClient {
 public:
  RestFlowClient(const std::string& host, int port) : cli_(host, port) {
    cli_.set_keep_alive(true);
    cli_.set_tcp_nodelay(true);
    cli_.set_connection_timeout(std::chrono::seconds(2));
    cli_.set_read_timeout(std::chrono::seconds(5));
  }

  RuleId add(const FlowModRequest& req) {
    auto res = cli_.Post("/flows", add_request_to_json(req).dump(), "application/json");
    check(res, 201);
    return json::parse(res->body).at("rule_id").get<RuleId>();
  }

  void remove(Dpid dpid, RuleId id) {
    auto res = cli_.Delete("/flows/" + std::to_string(dpid) + "/" + std::to_string(id));
    check(res, 204);
  }

  json rules(Dpid dpid) {
    auto res = cli_.Get("/flows/" + std::to_string(dpid));
    check(res, 200);
    return json::parse(res->body).at("rules");
  }

 private:
  static void check(const httplib::Result& res, int want) {
    if (!res) throw RestError(0, "http request failed: " + httplib::to_string(res.error()));
    if (res->status != want) throw RestError(res->status, "http " + std::to_string(res->status) + ": " + res->body);
  }

  httplib::Client cli_;
};

}  // namespace dsdn::core
