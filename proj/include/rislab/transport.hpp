#pragma once

// Line transports under the control protocol. Two interchangeable
// implementations of the same blocking interface:
//   - in-process duplex pipes (deterministic, no OS dependencies) and
//   - TCP loopback sockets with identical newline framing.
// recv_line distinguishes "nothing yet" (timeout -> nullopt) from "peer
// gone" (ConnectionClosed), which the broker maps to agent_lost.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace rislab {

class ConnectionClosed : public std::runtime_error {
 public:
  ConnectionClosed() : std::runtime_error("connection closed") {}
};

class Connection {
 public:
  virtual ~Connection() = default;
  // line is sent verbatim; callers pass encode() output (newline included).
  virtual void send_line(const std::string& line) = 0;
  // Returns one line without its trailing newline, nullopt on timeout.
  virtual std::optional<std::string> recv_line(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
};

// ---------------------------------------------------------------------------
// In-process pipe

namespace detail {

struct LineQueue {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool closed = false;

  void push(const std::string& line) {
    {
      std::lock_guard<std::mutex> lock(m);
      if (closed) throw ConnectionClosed();
      lines.push_back(line);
    }
    cv.notify_all();
  }

  std::optional<std::string> pop(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(m);
    cv.wait_for(lock, timeout, [&] { return !lines.empty() || closed; });
    if (!lines.empty()) {
      std::string line = std::move(lines.front());
      lines.pop_front();
      return line;
    }
    if (closed) throw ConnectionClosed();
    return std::nullopt;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(m);
      closed = true;
    }
    cv.notify_all();
  }
};

}  // namespace detail

class PipeConnection : public Connection {
 public:
  PipeConnection(std::shared_ptr<detail::LineQueue> in, std::shared_ptr<detail::LineQueue> out)
      : in_(std::move(in)), out_(std::move(out)) {}

  ~PipeConnection() override { close(); }

  void send_line(const std::string& line) override {
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\n') stripped.pop_back();
    out_->push(stripped);
  }

  std::optional<std::string> recv_line(std::chrono::milliseconds timeout) override {
    return in_->pop(timeout);
  }

  void close() override {
    in_->close();
    out_->close();
  }

 private:
  std::shared_ptr<detail::LineQueue> in_;
  std::shared_ptr<detail::LineQueue> out_;
};

// Two connected endpoints; what one sends the other receives.
inline std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>> make_pipe() {
  auto a_to_b = std::make_shared<detail::LineQueue>();
  auto b_to_a = std::make_shared<detail::LineQueue>();
  return {std::make_unique<PipeConnection>(b_to_a, a_to_b),
          std::make_unique<PipeConnection>(a_to_b, b_to_a)};
}

// ---------------------------------------------------------------------------
// TCP loopback

class TcpConnection : public Connection {
 public:
  explicit TcpConnection(int fd) : fd_(fd) {}
  ~TcpConnection() override { close(); }

  TcpConnection(const TcpConnection&) = delete;
  TcpConnection& operator=(const TcpConnection&) = delete;

  void send_line(const std::string& line) override {
    if (fd_ < 0) throw ConnectionClosed();
    std::size_t sent = 0;
    while (sent < line.size()) {
      const ssize_t k = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (k <= 0) {
        close();
        throw ConnectionClosed();
      }
      sent += static_cast<std::size_t>(k);
    }
  }

  std::optional<std::string> recv_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const std::size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      if (fd_ < 0) throw ConnectionClosed();
      const auto now = std::chrono::steady_clock::now();
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      if (left.count() <= 0) return std::nullopt;
      struct pollfd pfd {fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (pr == 0) return std::nullopt;
      if (pr < 0) continue;  // EINTR
      char chunk[4096];
      const ssize_t k = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (k <= 0) {
        // Drained and peer gone; a partial trailing line is discarded.
        close();
        throw ConnectionClosed();
      }
      buf_.append(chunk, static_cast<std::size_t>(k));
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

class TcpListener {
 public:
  // port 0 picks an ephemeral port; port() reports the bound one.
  explicit TcpListener(std::uint16_t port = 0) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd_);
      throw std::runtime_error("bind failed on 127.0.0.1:" + std::to_string(port));
    }
    if (::listen(fd_, 8) != 0) {
      ::close(fd_);
      throw std::runtime_error("listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }

  std::unique_ptr<Connection> accept(std::chrono::milliseconds timeout) {
    struct pollfd pfd {fd_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (pr <= 0) return nullptr;
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) return nullptr;
    return std::make_unique<TcpConnection>(cfd);
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

inline std::unique_ptr<Connection> tcp_connect(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("bad address " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
  }
  return std::make_unique<TcpConnection>(fd);
}

}  // namespace rislab
