// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "permhe/error.hpp"
#include "permhe/transport/frame.hpp"

namespace permhe::transport {

/// Ordered, reliable byte stream owned by one session. Keeps raw
/// per-direction byte counters independent of any framing.
class Channel {
 public:
  virtual ~Channel() = default;

  void write(std::span<const std::uint8_t> bytes) {
    do_write(bytes);
    written_ += bytes.size();
  }
  void read(std::span<std::uint8_t> out) {
    do_read(out);
    read_ += out.size();
  }
  virtual void close() = 0;

  std::uint64_t bytes_written() const { return written_; }
  std::uint64_t bytes_read() const { return read_; }

 protected:
  virtual void do_write(std::span<const std::uint8_t> bytes) = 0;
  virtual void do_read(std::span<std::uint8_t> out) = 0;

 private:
  std::atomic<std::uint64_t> written_{0};
  std::atomic<std::uint64_t> read_{0};
};

inline void send_frame(Channel& ch, const Frame& f, std::size_t max_payload = kDefaultMaxPayload) {
  const auto header = encode_frame_header(f, max_payload);
  ch.write(header);
  ch.write(f.payload);
}

inline Frame recv_frame(Channel& ch, std::size_t max_payload = kDefaultMaxPayload) {
  std::uint8_t header[kFrameHeaderBytes];
  ch.read(header);
  Frame f;
  const std::size_t n = parse_frame_header(header, f, max_payload);
  f.payload.resize(n);
  ch.read(f.payload);
  return f;
}

namespace detail {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::uint8_t> buf;
  std::size_t head = 0;
  bool closed = false;
};

}  // namespace detail

/// One end of an in-process duplex pipe.
class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<detail::Pipe> in, std::shared_ptr<detail::Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackChannel() override { close(); }

  void close() override {
    for (auto* p : {in_.get(), out_.get()}) {
      std::lock_guard lk(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

 protected:
  void do_write(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lk(out_->mu);
    require(!out_->closed, ErrorCode::disconnected, "loopback peer closed");
    out_->buf.insert(out_->buf.end(), bytes.begin(), bytes.end());
    out_->cv.notify_all();
  }

  void do_read(std::span<std::uint8_t> out) override {
    std::unique_lock lk(in_->mu);
    std::size_t got = 0;
    while (got < out.size()) {
      in_->cv.wait(lk, [&] { return in_->buf.size() > in_->head || in_->closed; });
      const std::size_t avail = in_->buf.size() - in_->head;
      if (avail == 0) throw Error(ErrorCode::disconnected, "loopback peer closed");
      const std::size_t take = std::min(avail, out.size() - got);
      std::memcpy(out.data() + got, in_->buf.data() + in_->head, take);
      in_->head += take;
      got += take;
      if (in_->head == in_->buf.size()) {
        in_->buf.clear();
        in_->head = 0;
      }
    }
  }

 private:
  std::shared_ptr<detail::Pipe> in_, out_;
};

inline std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair() {
  auto a = std::make_shared<detail::Pipe>();
  auto b = std::make_shared<detail::Pipe>();
  return {std::make_unique<LoopbackChannel>(a, b), std::make_unique<LoopbackChannel>(b, a)};
}

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override { close(); }
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

 protected:
  void do_write(std::span<const std::uint8_t> bytes) override {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorCode::disconnected, std::string("tcp send failed: ") + std::strerror(errno));
      sent += static_cast<std::size_t>(n);
    }
  }

  void do_read(std::span<std::uint8_t> out) override {
    std::size_t got = 0;
    while (got < out.size()) {
      const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n == 0) throw Error(ErrorCode::disconnected, "tcp peer closed the connection");
      if (n < 0) throw Error(ErrorCode::disconnected, std::string("tcp recv failed: ") + std::strerror(errno));
      got += static_cast<std::size_t>(n);
    }
  }

 private:
  std::atomic<int> fd_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& addr) {
    const auto colon = addr.rfind(':');
    require(colon != std::string::npos && colon + 1 < addr.size(), ErrorCode::config,
            "address '" + addr + "' is not host:port");
    Endpoint e;
    e.host = addr.substr(0, colon);
    if (e.host.empty()) e.host = "127.0.0.1";
    try {
      const long p = std::stol(addr.substr(colon + 1));
      require(p >= 0 && p <= 65535, ErrorCode::config, "port out of range in '" + addr + "'");
      e.port = static_cast<std::uint16_t>(p);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::config, "bad port in '" + addr + "'");
    }
    return e;
  }
  std::string str() const { return host + ":" + std::to_string(port); }
};

inline std::unique_ptr<TcpChannel> tcp_connect(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw Error(ErrorCode::transport, "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  int last_errno = 0;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) return std::make_unique<TcpChannel>(fd);
    last_errno = errno;
    ::close(fd);
  }
  throw Error(ErrorCode::transport, "cannot connect to " + ep.str() + ": " + std::strerror(last_errno));
}

class TcpListener {
 public:
  explicit TcpListener(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    require(fd_ >= 0, ErrorCode::transport, "socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host == "localhost" ? "127.0.0.1" : ep.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw Error(ErrorCode::config, "listen address must be an IPv4 literal: " + ep.host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 64) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw Error(ErrorCode::transport, "cannot listen on " + ep.str() + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_ = Endpoint{ep.host, ntohs(addr.sin_port)};
  }
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  const Endpoint& endpoint() const { return bound_; }

  /// Waits up to timeout_ms; returns nullptr on timeout.
  std::unique_ptr<TcpChannel> accept(int timeout_ms = -1) {
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, timeout_ms);
    if (rc == 0 || (rc < 0 && errno == EINTR)) return nullptr;
    require(rc > 0, ErrorCode::transport, "poll on listener failed");
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) return nullptr;
    return std::make_unique<TcpChannel>(fd);
  }

 private:
  int fd_ = -1;
  Endpoint bound_;
};

}  // namespace permhe::transport
