#include "gslb/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>

#include "gslb/error.hpp"

namespace gslb::net {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

Clock::time_point deadline_after(double seconds) {
  return Clock::now() + std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
}

bool to_sockaddr(const HostPort& hp, sockaddr_in& out) {
  std::memset(&out, 0, sizeof out);
  out.sin_family = AF_INET;
  out.sin_port = htons(static_cast<std::uint16_t>(hp.port));
  std::string host = hp.host == "localhost" ? "127.0.0.1" : hp.host;
  if (host.empty() || host == "*") host = "0.0.0.0";
  return ::inet_pton(AF_INET, host.c_str(), &out.sin_addr) == 1;
}

}  // namespace

HostPort parse_host_port(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(Errc::SchemaError, "expected host:port, got '" + std::string(text) + "'");
  }
  int port = -1;
  const auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw Error(Errc::SchemaError, "bad port in '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, colon)), port};
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    reset();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::reset() noexcept {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
  }
  fd_ = -1;
}

Listener Listener::bind(const HostPort& address) {
  sockaddr_in addr{};
  if (!to_sockaddr(address, addr)) {
    throw Error(Errc::BindFailure, "cannot parse listen address " + address.str());
  }
  Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!sock.valid()) throw Error(Errc::BindFailure, "socket(): " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(sock.fd(), 512) != 0) {
    throw Error(Errc::BindFailure, "cannot listen on " + address.str() + " (port " +
                                       std::to_string(address.port) +
                                       "): " + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  Listener l;
  l.sock_ = std::move(sock);
  l.port_ = ntohs(addr.sin_port);
  return l;
}

std::optional<Socket> Listener::accept(double timeout) {
  if (!sock_.valid()) return std::nullopt;
  pollfd p{sock_.fd(), POLLIN, 0};
  if (::poll(&p, 1, static_cast<int>(timeout * 1000)) <= 0 || !(p.revents & POLLIN)) {
    return std::nullopt;
  }
  const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return std::nullopt;
  return Socket(fd);
}

std::optional<Socket> connect(const HostPort& address, double timeout) {
  sockaddr_in addr{};
  if (!to_sockaddr(address, addr)) return std::nullopt;
  Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!sock.valid()) return std::nullopt;
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    if (errno != EINPROGRESS) return std::nullopt;
    pollfd p{sock.fd(), POLLOUT, 0};
    if (::poll(&p, 1, static_cast<int>(timeout * 1000)) <= 0) return std::nullopt;
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) return std::nullopt;
  }
  return sock;
}

bool send_all(const Socket& sock, std::string_view data, double timeout) {
  const auto deadline = deadline_after(timeout);
  while (!data.empty()) {
    const ssize_t n = ::send(sock.fd(), data.data(), data.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n > 0) {
      data.remove_prefix(static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
      pollfd p{sock.fd(), POLLOUT, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) <= 0) return false;
      continue;
    }
    return false;
  }
  return true;
}

std::optional<std::string> read_line(const Socket& sock, double timeout, std::size_t max_bytes) {
  const auto deadline = deadline_after(timeout);
  std::string line;
  char c = 0;
  while (line.size() < max_bytes) {
    pollfd p{sock.fd(), POLLIN, 0};
    const int ready = ::poll(&p, 1, remaining_ms(deadline));
    if (ready <= 0) return std::nullopt;
    const ssize_t n = ::recv(sock.fd(), &c, 1, MSG_DONTWAIT);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      return std::nullopt;
    }
    line.push_back(c);
    if (c == '\n') return line;
  }
  return std::nullopt;
}

std::optional<std::string> exchange_line(const HostPort& address, std::string_view line,
                                         double timeout) {
  auto sock = connect(address, timeout);
  if (!sock) return std::nullopt;
  if (!send_all(*sock, line, timeout)) return std::nullopt;
  auto reply = read_line(*sock, timeout);
  if (!reply) return std::nullopt;
  reply->pop_back();
  if (!reply->empty() && reply->back() == '\r') reply->pop_back();
  return reply;
}

}  // namespace gslb::net
