#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gslb/balancer.hpp"
#include "gslb/net.hpp"
#include "gslb/selector.hpp"

namespace httplib {
class Server;
}

namespace gslb::wire {

// ------------------------------------------------------------------ resolver

/// A selector group behind one lock: administrative writes and cursor
/// advancement on any node serialize here.
struct SharedSelectors {
  std::mutex mu;
  SelectorGroup group;
};

/// Answers one request line of the resolver protocol against `node`:
///   "RESOLVE <app_id>\n" -> "OK <host:port>\n" | "ERR UNKNOWN_APP\n" | "ERR NO_BALANCER\n"
/// anything else        -> "ERR MALFORMED\n"
std::string answer_resolve_line(SelectorNode& node, std::string_view line);

/// One resolver process: serves node `node_index` of the shared group.
class ResolverService {
 public:
  ResolverService(std::shared_ptr<SharedSelectors> selectors, std::size_t node_index,
                  net::HostPort listen);
  ~ResolverService();
  ResolverService(const ResolverService&) = delete;
  ResolverService& operator=(const ResolverService&) = delete;

  /// Throws BindFailure.
  void start();
  /// Stops accepting, lets in-progress exchanges finish, closes the port.
  void stop();
  bool running() const noexcept { return running_; }
  net::HostPort address() const { return {listen_.host, port_}; }

 private:
  void accept_loop();
  void serve(net::Socket sock);

  std::shared_ptr<SharedSelectors> selectors_;
  std::size_t node_index_;
  net::HostPort listen_;
  int port_ = 0;
  net::Listener listener_;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex workers_mu_;
  std::list<Worker> workers_;
};

struct Resolved {
  std::string address;
  bool from_slave = false;
  double elapsed = 0.0;  // seconds
};

/// Tries the master with `timeout` for connect and reply, then the slave.
/// Throws AllSelectorsDown when neither gives an OK answer, UnknownApp when
/// a reachable resolver says so.
Resolved live_resolve_with_failover(const net::HostPort& master, const net::HostPort& slave,
                                    const std::string& app_id, double timeout = 0.2);

// ------------------------------------------------------------------ backends

/// A backend's static content: body carries "SERVER=web-<id>" and is padded
/// to the requested page size.
struct StaticSite {
  BackendId id = 0;
  std::string body;
};

StaticSite make_static_site(BackendId id, std::uint64_t page_size);
/// The "SERVER=web-<id>" token inside a body, empty if absent.
std::string server_token(std::string_view body);

/// Minimal HTTP service around a StaticSite: GET / (any path) returns the
/// body, GET /health returns "ok".
class BackendServer {
 public:
  BackendServer(StaticSite site, net::HostPort listen);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  void start();  // throws BindFailure; restartable after stop()
  void stop();
  bool running() const noexcept { return running_; }
  net::HostPort address() const { return listen_; }
  const StaticSite& site() const noexcept { return site_; }

 private:
  StaticSite site_;
  net::HostPort listen_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  bool running_ = false;
};

// ------------------------------------------------------------------ proxy

/// A balancer shared between proxy handler threads and its probe loop.
struct SharedBalancer {
  explicit SharedBalancer(BalancerNode node) : node(std::move(node)) {}

  std::mutex mu;
  BalancerNode node;
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();

  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch).count();
  }
};

/// HTTP/1.1 reverse proxy standing in for an LVS director in Proxy mode.
/// Each GET is dispatched through the balancer, fetched from the chosen
/// backend and relayed; the assignment completes when the exchange ends.
/// No healthy backend or admission overload -> 503; backend unreachable ->
/// 502 plus a failed probe result for that backend.
class ProxyService {
 public:
  ProxyService(std::shared_ptr<SharedBalancer> balancer, net::HostPort listen,
               double backend_timeout = 1.0);
  ~ProxyService();
  ProxyService(const ProxyService&) = delete;
  ProxyService& operator=(const ProxyService&) = delete;

  void start();
  void stop();
  bool running() const noexcept { return running_; }
  net::HostPort address() const { return listen_; }

 private:
  std::shared_ptr<SharedBalancer> balancer_;
  net::HostPort listen_;
  double backend_timeout_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> next_request_{1};
  bool running_ = false;
};

/// Periodic GET /health against every backend of a balancer, fed to probe_tick.
class ProbeLoop {
 public:
  ProbeLoop(std::shared_ptr<SharedBalancer> balancer, HealthProbeConfig config,
            double timeout = 0.2);
  ~ProbeLoop();
  ProbeLoop(const ProbeLoop&) = delete;
  ProbeLoop& operator=(const ProbeLoop&) = delete;

  void start();
  void stop();

 private:
  void run();

  std::shared_ptr<SharedBalancer> balancer_;
  HealthProbeConfig config_;
  double timeout_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread thread_;
};

/// Single HTTP GET with connection close; empty on transport failure.
struct HttpResult {
  int status = 0;
  std::string body;
};
std::optional<HttpResult> http_get(const net::HostPort& address, const std::string& path,
                                   double timeout);

}  // namespace gslb::wire
