#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace gslb::net {

struct HostPort {
  std::string host;
  int port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const HostPort&) const = default;
};

/// Parses "host:port"; throws Error(SchemaError) on malformed input.
HostPort parse_host_port(std::string_view text);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void reset() noexcept;

 private:
  int fd_ = -1;
};

/// A bound, listening IPv4 TCP socket.
class Listener {
 public:
  /// Throws Error(BindFailure) naming the address when bind/listen fails.
  static Listener bind(const HostPort& address);

  /// Waits up to `timeout` seconds; empty when nothing arrived.
  std::optional<Socket> accept(double timeout);
  int port() const noexcept { return port_; }
  void close() noexcept { sock_.reset(); }
  bool open() const noexcept { return sock_.valid(); }

 private:
  Socket sock_;
  int port_ = 0;
};

/// Non-blocking connect bounded by `timeout` seconds.
std::optional<Socket> connect(const HostPort& address, double timeout);

bool send_all(const Socket& sock, std::string_view data, double timeout);

/// Reads up to and including the first LF. Empty on timeout, EOF before LF,
/// or when `max_bytes` pass without an LF.
std::optional<std::string> read_line(const Socket& sock, double timeout,
                                     std::size_t max_bytes = 1024);

/// Connects, sends `line`, returns the first response line (without LF).
/// Empty when any step fails or times out.
std::optional<std::string> exchange_line(const HostPort& address, std::string_view line,
                                         double timeout);

}  // namespace gslb::net
