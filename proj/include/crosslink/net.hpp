// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Minimal TCP plumbing for framed messaging on loopback/IPv4: RAII socket,
// listener with ephemeral-port support, and deadline-aware frame IO.

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"
#include "crosslink/wire.hpp"

namespace crosslink {

class NetError : public std::runtime_error {
 public:
  enum class Kind { unreachable, timeout, closed, protocol };

  NetError(Kind kind, const std::string& what) : std::runtime_error("net: " + what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  // Wakes up any thread blocked in poll/read on this socket.
  void shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

inline Endpoint parse_endpoint(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size())
    throw NetError(NetError::Kind::protocol, "bad address '" + address + "'");
  Endpoint ep;
  ep.host = address.substr(0, colon);
  if (ep.host == "localhost" || ep.host.empty()) ep.host = "127.0.0.1";
  unsigned long port = std::stoul(address.substr(colon + 1));
  if (port > 65535) throw NetError(NetError::Kind::protocol, "bad port in '" + address + "'");
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

namespace detail {
inline sockaddr_in make_addr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
    throw NetError(NetError::Kind::protocol, "bad host '" + ep.host + "'");
  return addr;
}

using Clock = std::chrono::steady_clock;

inline int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  if (left.count() <= 0) return 0;
  if (left.count() > 3600'000) return 3600'000;
  return static_cast<int>(left.count());
}

inline void wait_ready(int fd, short events, Clock::time_point deadline, const char* action) {
  pollfd pfd{fd, events, 0};
  int ms = remaining_ms(deadline);
  int rc = ::poll(&pfd, 1, ms);
  if (rc == 0) throw NetError(NetError::Kind::timeout, std::string(action) + " timed out");
  if (rc < 0) throw NetError(NetError::Kind::closed, std::string(action) + " poll failed");
}
}  // namespace detail

// Bound, listening socket. Pass port 0 to let the kernel pick one.
class Listener {
 public:
  explicit Listener(const Endpoint& ep) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetError(NetError::Kind::unreachable, "socket() failed");
    socket_ = Socket(fd);
    int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr = detail::make_addr(ep);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      throw NetError(NetError::Kind::unreachable,
                     "bind to " + ep.to_string() + " failed: " + std::strerror(errno));
    if (::listen(fd, 64) != 0)
      throw NetError(NetError::Kind::unreachable, "listen failed");
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  std::uint16_t port() const { return port_; }
  int fd() const { return socket_.fd(); }
  void close() { socket_.close(); }
  void shutdown() { socket_.shutdown_both(); }

  // Blocks until a connection arrives or the listener is closed/shut down.
  Socket accept() {
    while (true) {
      pollfd pfd{socket_.fd(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, 200);
      if (socket_.fd() < 0) throw NetError(NetError::Kind::closed, "listener closed");
      if (rc < 0) throw NetError(NetError::Kind::closed, "listener poll failed");
      if (rc == 0) continue;
      int client = ::accept(socket_.fd(), nullptr, nullptr);
      if (client < 0) throw NetError(NetError::Kind::closed, "accept failed");
      return Socket(client);
    }
  }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

inline Socket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError(NetError::Kind::unreachable, "socket() failed");
  Socket sock(fd);
  sockaddr_in addr = detail::make_addr(ep);
  auto deadline = detail::Clock::now() + timeout;
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno != EINPROGRESS)
      throw NetError(NetError::Kind::unreachable,
                     "connect to " + ep.to_string() + " failed: " + std::strerror(errno));
    try {
      detail::wait_ready(fd, POLLOUT, deadline, "connect");
    } catch (const NetError& e) {
      if (e.kind() == NetError::Kind::timeout)
        throw NetError(NetError::Kind::unreachable, "connect to " + ep.to_string() + " timed out");
      throw;
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0)
      throw NetError(NetError::Kind::unreachable,
                     "connect to " + ep.to_string() + " failed: " + std::strerror(err));
  }
  ::fcntl(fd, F_SETFL, flags);
  int yes = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
  return sock;
}

inline void write_all(Socket& sock, ByteView data, std::chrono::milliseconds timeout) {
  auto deadline = detail::Clock::now() + timeout;
  std::size_t sent = 0;
  while (sent < data.size()) {
    detail::wait_ready(sock.fd(), POLLOUT, deadline, "write");
    ssize_t n = ::send(sock.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw NetError(NetError::Kind::closed, "connection closed during write");
    sent += static_cast<std::size_t>(n);
  }
}

namespace detail {
inline void read_exact(Socket& sock, std::uint8_t* out, std::size_t n, Clock::time_point deadline,
                       bool eof_ok_at_start, bool* got_eof) {
  std::size_t have = 0;
  while (have < n) {
    wait_ready(sock.fd(), POLLIN, deadline, "read");
    ssize_t rc = ::recv(sock.fd(), out + have, n - have, 0);
    if (rc == 0) {
      if (eof_ok_at_start && have == 0 && got_eof) {
        *got_eof = true;
        return;
      }
      throw NetError(NetError::Kind::closed, "connection closed during read");
    }
    if (rc < 0) throw NetError(NetError::Kind::closed, "read failed");
    have += static_cast<std::size_t>(rc);
  }
}
}  // namespace detail

// Reads one complete frame (including the 4-byte length prefix). Returns an
// empty buffer on clean EOF before any byte of a frame.
inline Bytes read_frame(Socket& sock, std::chrono::milliseconds timeout) {
  auto deadline = detail::Clock::now() + timeout;
  Bytes header(4);
  bool eof = false;
  detail::read_exact(sock, header.data(), 4, deadline, /*eof_ok_at_start=*/true, &eof);
  if (eof) return {};
  std::uint32_t len = detail::get_u32be(header);
  if (len < 1 || len > max_frame_bytes)
    throw NetError(NetError::Kind::protocol, "bad frame length " + std::to_string(len));
  Bytes frame(4 + static_cast<std::size_t>(len));
  std::copy(header.begin(), header.end(), frame.begin());
  detail::read_exact(sock, frame.data() + 4, len, deadline, false, nullptr);
  return frame;
}

}  // namespace crosslink
