#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gslb/bench.hpp"
#include "gslb/net.hpp"
#include "gslb/scenario.hpp"
#include "gslb/wire.hpp"

namespace gslb::live {

struct Component {
  std::string id;    // selector-master, balancer-AP1-1, backend-AP1-3, ...
  std::string kind;  // resolver | proxy | backend
  std::string address;
  bool running = false;
};

/// Every service of a live scenario in this process: two resolvers, one
/// proxy (plus probe loop) per balancer and one server per backend.
class Deployment {
 public:
  explicit Deployment(const cli::ScenarioFile& scenario);
  ~Deployment();
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  /// Starts everything; on BindFailure the already started parts are stopped
  /// again and the error is rethrown.
  void start();
  void stop();

  std::vector<Component> components() const;
  /// Throws SchemaError for an unknown component id.
  void kill(const std::string& id);
  void revive(const std::string& id);

  std::shared_ptr<wire::SharedBalancer> balancer(const std::string& app_id,
                                                 std::size_t index = 0) const;
  wire::SharedSelectors& selectors() { return *selectors_; }

 private:
  struct Resolver {
    std::string id;
    std::unique_ptr<wire::ResolverService> service;
  };
  struct Proxy {
    std::string id;
    std::string app_id;
    std::shared_ptr<wire::SharedBalancer> balancer;
    std::unique_ptr<wire::ProxyService> service;
    std::unique_ptr<wire::ProbeLoop> probe;
  };
  struct Web {
    std::string id;
    std::unique_ptr<wire::BackendServer> server;
  };

  std::shared_ptr<wire::SharedSelectors> selectors_;
  std::vector<Resolver> resolvers_;
  std::vector<Proxy> proxies_;
  std::vector<Web> webs_;
};

/// Line-oriented admin channel of `gslb live up`:
///   KILL <id> | REVIVE <id> | STATUS | SHUTDOWN  ->  "OK ..." or "ERR <reason>"
class ControlService {
 public:
  ControlService(Deployment& deployment, net::HostPort listen, std::function<void()> on_shutdown);
  ~ControlService();

  void start();
  void stop();
  std::string handle(const std::string& line);

 private:
  Deployment& deployment_;
  net::HostPort listen_;
  std::function<void()> on_shutdown_;
  net::Listener listener_;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

/// Sends one control command; empty when the control port is unreachable.
std::optional<std::string> send_control(const net::HostPort& control, const std::string& command);

struct LiveTarget {
  net::HostPort master;
  net::HostPort slave;
  std::string app_id;
  double resolve_timeout = 0.2;
  double http_timeout = 5.0;
};

struct LiveRun {
  bench::RunReport report;
  std::vector<double> resolution_times;  // seconds, one per resolution attempt that succeeded
  std::uint64_t slave_resolutions = 0;
  std::vector<std::string> tokens;  // SERVER=web-<id> per completed request, completion order
};

/// Closed-loop ab workload with `concurrency` real worker threads.
LiveRun run_ab(const bench::AbSpec& spec, const LiveTarget& target);
/// Duration workload with `agents` worker threads; requests still running at
/// the cutoff are discarded.
LiveRun run_duration(const bench::DurationSpec& spec, const LiveTarget& target);

}  // namespace gslb::live
