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

// Loopback TCP plumbing: length-prefixed frames (u32 big-endian length, then
// the bytes), a threaded connection server and a request/response client.

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace dsdn::net {

inline constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline NetError sys_error(const std::string& what) {
  return NetError(what + ": " + std::strerror(errno));
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  /// Wakes any thread blocked on this socket.
  void shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  void set_nodelay() {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  void set_recv_timeout(std::chrono::milliseconds t) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(t.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  }

  void send_all(std::span<const uint8_t> data) {
    while (!data.empty()) {
      auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw sys_error("send");
      }
      data = data.subspan(static_cast<std::size_t>(n));
    }
  }

  /// Fills `out` completely. Returns false on orderly close before the
  /// first byte; throws on errors or a close mid-read.
  bool recv_all(std::span<uint8_t> out) {
    std::size_t got = 0;
    while (got < out.size()) {
      auto n = ::recv(fd_, out.data() + got, out.size() - got, 0);
      if (n == 0) {
        if (got == 0) return false;
        throw NetError("connection closed mid-frame");
      }
      if (n < 0) {
        if (errno == EINTR) continue;
        throw sys_error("recv");
      }
      got += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  int fd_ = -1;
};

inline void write_frame(Socket& s, std::span<const uint8_t> bytes) {
  std::vector<uint8_t> buf(4 + bytes.size());
  auto len = static_cast<uint32_t>(bytes.size());
  buf[0] = static_cast<uint8_t>(len >> 24);
  buf[1] = static_cast<uint8_t>(len >> 16);
  buf[2] = static_cast<uint8_t>(len >> 8);
  buf[3] = static_cast<uint8_t>(len);
  std::copy(bytes.begin(), bytes.end(), buf.begin() + 4);
  s.send_all(buf);
}

/// Empty on orderly close.
inline std::optional<std::vector<uint8_t>> read_frame(Socket& s) {
  uint8_t hdr[4];
  if (!s.recv_all(hdr)) return std::nullopt;
  uint32_t len = (uint32_t{hdr[0]} << 24) | (uint32_t{hdr[1]} << 16) | (uint32_t{hdr[2]} << 8) | hdr[3];
  if (len > kMaxFrameBytes) throw NetError("frame of " + std::to_string(len) + " bytes too large");
  std::vector<uint8_t> body(len);
  if (len > 0 && !s.recv_all(body)) throw NetError("connection closed mid-frame");
  return body;
}

inline sockaddr_in loopback_addr(const std::string& host, int port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &a.sin_addr) != 1) throw NetError("bad IPv4 address " + host);
  return a;
}

inline Socket connect_tcp(const std::string& host, int port) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw sys_error("socket");
  auto addr = loopback_addr(host, port);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw sys_error("connect " + host + ":" + std::to_string(port));
  }
  s.set_nodelay();
  return s;
}

/// Accepts connections and runs `on_connection` on a thread per connection.
/// The handler should return when its socket is shut down.
class StreamServer {
 public:
  using Handler = std::function<void(Socket&)>;

  StreamServer(Handler on_connection, const std::string& host = "127.0.0.1", int port = 0)
      : handler_(std::move(on_connection)) {
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!listener_.valid()) throw sys_error("socket");
    int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto addr = loopback_addr(host, port);
    if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw sys_error("bind " + host + ":" + std::to_string(port));
    }
    if (::listen(listener_.fd(), 64) != 0) throw sys_error("listen");
    socklen_t len = sizeof addr;
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    host_ = host;
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  ~StreamServer() { stop(); }

  int port() const { return port_; }
  const std::string& host() const { return host_; }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopped_) return;
      stopped_ = true;
      listener_.shutdown();
      for (auto& c : conns_) c->socket.shutdown();
    }
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::unique_ptr<Conn>> conns;
    {
      std::lock_guard lock(mu_);
      conns.swap(conns_);
    }
    for (auto& c : conns) {
      if (c->thread.joinable()) c->thread.join();
    }
    listener_.close();
  }

 private:
  struct Conn {
    Socket socket;
    std::thread thread;
  };

  void accept_loop() {
    for (;;) {
      int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return;  // listener shut down
      }
      std::lock_guard lock(mu_);
      if (stopped_) {
        ::close(fd);
        return;
      }
      auto conn = std::make_unique<Conn>();
      conn->socket = Socket(fd);
      conn->socket.set_nodelay();
      auto* raw = conn.get();
      conn->thread = std::thread([this, raw] {
        try {
          handler_(raw->socket);
        } catch (const std::exception&) {
          // peer went away
        }
        raw->socket.shutdown();
      });
      conns_.push_back(std::move(conn));
    }
  }

  Handler handler_;
  Socket listener_;
  std::string host_;
  int port_ = 0;
  std::thread acceptor_;
  std::mutex mu_;
  bool stopped_ = false;
  std::list<std::unique_ptr<Conn>> conns_;
};

/// Request/response server: every inbound frame is answered by one frame.
class RpcServer {
 public:
  using Handler = std::function<std::vector<uint8_t>(std::span<const uint8_t>)>;

  explicit RpcServer(Handler handler, const std::string& host = "127.0.0.1", int port = 0)
      : handler_(std::move(handler)),
        server_([this](Socket& s) { serve(s); }, host, port) {}

  int port() const { return server_.port(); }
  void stop() { server_.stop(); }

 private:
  void serve(Socket& s) {
    while (auto req = read_frame(s)) write_frame(s, handler_(*req));
  }

  Handler handler_;
  StreamServer server_;
};

/// Request/response client with a pool of connections, so concurrent
/// callers do not queue behind each other.
class RpcClient {
 public:
  RpcClient(std::string host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(10))
      : host_(std::move(host)), port_(port), timeout_(timeout) {
    release(open());  // fail fast when nothing listens
  }

  std::vector<uint8_t> call(std::span<const uint8_t> request) {
    // A connection that fails mid-call is dropped rather than returned.
    auto s = acquire();
    write_frame(*s, request);
    auto reply = read_frame(*s);
    if (!reply) throw NetError("server closed connection");
    release(std::move(s));
    return std::move(*reply);
  }

 private:
  std::unique_ptr<Socket> open() {
    auto s = std::make_unique<Socket>(connect_tcp(host_, port_));
    s->set_recv_timeout(timeout_);
    return s;
  }

  std::unique_ptr<Socket> acquire() {
    {
      std::lock_guard lock(mu_);
      if (!idle_.empty()) {
        auto s = std::move(idle_.back());
        idle_.pop_back();
        return s;
      }
    }
    return open();
  }

  void release(std::unique_ptr<Socket> s) {
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(s));
  }

  std::string host_;
  int port_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::vector<std::unique_ptr<Socket>> idle_;
};

}  // namespace dsdn::net
