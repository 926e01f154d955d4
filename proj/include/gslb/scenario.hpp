#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gslb/balancer.hpp"
#include "gslb/bench.hpp"
#include "gslb/error.hpp"
#include "gslb/simnet.hpp"

namespace gslb::cli {

enum class Mode { Sim, Live };

struct AppSpec {
  std::string app_id;
  std::vector<Backend> backends;  // ascending id; address empty unless given
  std::vector<int> groups;        // bandwidth group per backend, parallel to backends
  std::vector<sim::BalancerSpec> balancers;
};

struct SelectorsSpec {
  std::string master;
  std::string slave;  // empty: no slave
  sim::ResolveCache resolve_cache = sim::ResolveCache::PerRequest;
  double connect_timeout = 0.2;  // seconds, live mode
};

enum class WorkloadKind { Ab, Duration };

struct Workload {
  WorkloadKind kind = WorkloadKind::Ab;
  bench::AbSpec ab;
  bench::DurationSpec duration;
};

struct Ports {
  int control = 0;
  int backend_base = 0;
};

/// A validated scenario document.
struct ScenarioFile {
  std::uint64_t seed = 1;
  Mode mode = Mode::Sim;
  std::vector<AppSpec> apps;
  SelectorsSpec selectors;
  sim::Latencies latencies;
  Workload workload;
  Ports ports;
  HealthProbeConfig probe;
  bool probing = false;
  double page_jitter = 0.0;
  std::vector<sim::ControlEvent> events;
};

struct SchemaIssue {
  std::string path;  // e.g. "apps[0].backends[2].capacity_bytes_per_s"
  std::string message;
};

/// Thrown by parse_scenario with every problem found, not just the first.
class SchemaErrors : public Error {
 public:
  explicit SchemaErrors(std::vector<SchemaIssue> issues);
  const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<SchemaIssue> issues_;
};

ScenarioFile parse_scenario(const std::string& path);
ScenarioFile parse_scenario_text(const std::string& text);

/// Live-mode address of a backend: its own address, else
/// 127.0.0.1:(backend_base + running index over all apps).
std::string backend_address(const ScenarioFile& scenario, std::size_t app_index,
                            std::size_t backend_index);

sim::SystemConfig system_for(const ScenarioFile& scenario, const AppSpec& app);

/// Capacities in units of 1000 B/s joined per group, e.g. {"100/100/1000", "1000/1000"}.
std::vector<std::string> bandwidth_groups(const AppSpec& app);
/// Balancer algorithm labels joined with " + ".
std::string algorithm_label(const AppSpec& app);
/// "single-level" for one balancer, "two-level" otherwise.
std::string scenario_label(const AppSpec& app);

}  // namespace gslb::cli
