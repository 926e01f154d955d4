#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gslb/model.hpp"

namespace gslb {

enum class ForwardingMode { DirectRouting, Proxy };

std::string_view forwarding_mode_name(ForwardingMode mode) noexcept;

struct TrafficCounters {
  std::uint64_t requests_in = 0;
  std::uint64_t requests_dispatched = 0;
  std::uint64_t requests_rejected = 0;
  std::uint64_t requests_completed = 0;
  std::uint64_t bytes_request_in = 0;
  std::uint64_t bytes_request_out = 0;
  // Response bytes that crossed the balancer (Proxy mode only).
  std::uint64_t bytes_response_out = 0;
  // Response bytes sent backend -> client around the balancer (DirectRouting).
  std::uint64_t bytes_direct_to_client = 0;

  bool operator==(const TrafficCounters&) const = default;
};

struct Request {
  std::uint64_t id = 0;
  std::string app_id;
  std::string source;  // client address, read by source hashing
  std::uint64_t bytes = 0;
};

struct Assignment {
  std::uint64_t request_id = 0;
  BackendId backend_id = 0;
  std::string backend_address;
  double dispatch_time = 0.0;
};

struct HealthProbeConfig {
  double interval = 1.0;
  unsigned fail_threshold = 3;
  unsigned rise_threshold = 2;

  bool operator==(const HealthProbeConfig&) const = default;
};

struct ProbeResult {
  BackendId id = 0;
  bool ok = false;
};

struct HealthTransition {
  BackendId id = 0;
  Health to = Health::Up;
};

/// Consecutive probe outcomes for one backend; at most one field is nonzero.
struct ProbeStreak {
  unsigned successes = 0;
  unsigned failures = 0;
};

/// An LVS-style level-2 balancer over its own copy of a cluster.
///
/// Not thread-safe: callers that share a node across threads must serialize
/// every call (dispatch and complete form one consistency domain).
class BalancerNode {
 public:
  struct Config {
    std::string vip;
    SchedulerKind scheduler = SchedulerKind::RoundRobin;
    double forward_capacity = 1e9;  // requests per second
    ForwardingMode mode = ForwardingMode::DirectRouting;
    HealthProbeConfig probe{};
    // Token-bucket admission at forward_capacity; used by the live proxy.
    bool enforce_admission = false;
  };

  BalancerNode(Config config, ClusterSpec cluster);

  /// Counts an arriving request; it stays in flight until dispatched or rejected.
  void receive(const Request& request);

  /// Picks a backend and opens a connection on it in one step. Receives the
  /// request first if that has not happened yet. Throws NoHealthyBackend or
  /// Overloaded; both count the request as rejected.
  Assignment dispatch(const Request& request, double now);

  /// Closes the assignment's connection and books the response bytes.
  /// Throws UnknownAssignment.
  void complete(std::uint64_t request_id, std::uint64_t response_bytes);

  /// Applies threshold counting for each result. On any Up/Down transition the
  /// scheduler state is reconciled with the new healthy pool.
  std::vector<HealthTransition> probe_tick(std::span<const ProbeResult> results);

  /// Forces a backend's health (administrative change), reconciling state.
  void set_health(BackendId id, Health health);

  const std::string& vip() const noexcept { return config_.vip; }
  const Config& config() const noexcept { return config_; }
  SchedulerKind scheduler() const noexcept { return config_.scheduler; }
  ForwardingMode mode() const noexcept { return config_.mode; }
  const ClusterSpec& cluster() const noexcept { return cluster_; }
  const TrafficCounters& counters() const noexcept { return counters_; }
  const SchedulerState& scheduler_state() const noexcept { return state_; }
  const ProbeStreak& streak(BackendId id) const;

  /// Received but neither dispatched nor rejected yet.
  std::uint64_t in_flight() const noexcept { return waiting_.size(); }
  /// Dispatched but not completed.
  std::size_t outstanding() const noexcept { return assignments_.size(); }

  /// requests_in == dispatched + rejected + in_flight, and no response bytes
  /// on the balancer in DirectRouting mode.
  bool counters_consistent() const noexcept;

 private:
  void reconcile();

  Config config_;
  ClusterSpec cluster_;
  SchedulerState state_;
  TrafficCounters counters_;
  std::unordered_map<std::uint64_t, Assignment> assignments_;
  std::unordered_set<std::uint64_t> waiting_;
  std::unordered_map<BackendId, ProbeStreak> streaks_;
  double tokens_ = 0.0;
  double tokens_at_ = 0.0;
  bool tokens_init_ = false;
};

}  // namespace gslb
