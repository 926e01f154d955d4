#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "gslb/balancer.hpp"
#include "gslb/model.hpp"
#include "gslb/selector.hpp"

namespace gslb::sim {

enum class EventKind { Arrival, ResolutionDone, DispatchDone, TransferDone, ProbeTick, Control };

std::string_view event_kind_name(EventKind kind) noexcept;

struct LogRecord {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Arrival;
  std::uint64_t ref = 0;

  bool operator==(const LogRecord&) const = default;
};

/// Virtual clock plus a (time, seq)-ordered event queue. Single-threaded.
class Engine {
 public:
  using Handler = std::function<void()>;

  /// Throws TimeReversal when `time` is before now().
  std::uint64_t schedule(double time, EventKind kind, std::uint64_t ref, Handler handler);
  std::uint64_t schedule_in(double delay, EventKind kind, std::uint64_t ref, Handler handler) {
    return schedule(now_ + delay, kind, ref, std::move(handler));
  }

  /// Processes every event with time <= t_end, then moves the clock to t_end.
  void run_until(double t_end);
  /// Processes events until the queue is empty.
  void run();
  /// Processes one event; false when the queue is empty.
  bool step();

  double now() const noexcept { return now_; }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::optional<double> next_time() const noexcept;

  void set_logging(bool on) noexcept { logging_ = on; }
  const std::vector<LogRecord>& log() const noexcept { return log_; }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    std::uint64_t ref;
    Handler handler;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::vector<Event> queue_;  // binary heap ordered by Later
  std::vector<LogRecord> log_;
  bool logging_ = true;
};

using FlowId = std::uint64_t;

struct Flow {
  FlowId id = 0;
  double total_bytes = 0.0;
  double remaining_bytes = 0.0;
  double last_update = 0.0;
};

/// A backend's outbound link under equal processor sharing: with n active
/// flows each drains at capacity / n. Any join or leave first charges the
/// elapsed progress to every flow, then re-plans the next completion.
class ServerLink {
 public:
  using DoneFn = std::function<void(FlowId)>;

  ServerLink(double capacity, std::uint64_t ref = 0);

  void join(Engine& engine, FlowId id, double bytes, DoneFn on_done);
  /// Removes a flow without completing it; no-op for unknown ids.
  void leave(Engine& engine, FlowId id);

  double capacity() const noexcept { return capacity_; }
  std::size_t active() const noexcept { return flows_.size(); }
  const Flow* flow(FlowId id) const noexcept;
  double bytes_delivered() const noexcept { return delivered_; }

 private:
  struct Active {
    Flow flow;
    DoneFn on_done;
  };

  void advance(double now);
  void replan(Engine& engine);
  void on_timer(Engine& engine, std::uint64_t generation);

  double capacity_;
  std::uint64_t ref_;
  std::vector<Active> flows_;  // join order
  std::uint64_t generation_ = 0;
  double delivered_ = 0.0;
};

struct Latencies {
  double client_selector = 0.0;
  double client_balancer = 0.0;
  double balancer_backend = 0.0;

  bool operator==(const Latencies&) const = default;
};

enum class ResolveCache { PerRequest, PerAgent };

struct BalancerSpec {
  std::string vip;
  SchedulerKind scheduler = SchedulerKind::RoundRobin;
  double forward_capacity = 1e9;

  bool operator==(const BalancerSpec&) const = default;
};

/// One application's full two-level path: a selector group over one or more
/// balancers that all front the same backends.
struct SystemConfig {
  std::string app_id = "AP1";
  std::vector<Backend> backends;
  std::vector<BalancerSpec> balancers;
  std::vector<std::string> selector_ids = {"selector-master", "selector-slave"};
  Latencies latencies;
  ResolveCache resolve_cache = ResolveCache::PerRequest;
  ForwardingMode mode = ForwardingMode::DirectRouting;
  HealthProbeConfig probe;
  bool probing = false;
  // Optional page-size jitter as a fraction in [0, 1); 0 keeps sizes exact.
  double page_jitter = 0.0;
};

/// Timed fault injection: "selector-master", "selector-slave" or
/// "backend-<id>", switched Down (up = false) or back Up.
struct ControlEvent {
  double at = 0.0;
  std::string component;
  bool up = false;

  bool operator==(const ControlEvent&) const = default;
};

struct RequestRecord {
  std::uint64_t id = 0;
  std::size_t client = 0;
  double issue_time = 0.0;
  double completion_time = 0.0;
  bool ok = false;
  bool resolution_failed = false;
  std::string failure;
  BackendId backend = 0;
  std::string balancer_vip;
  std::size_t selector_node = 0;
  std::uint64_t bytes = 0;
};

std::string client_address(std::size_t client);

/// The whole request path of one application on one engine:
/// resolve -> balancer admission (FIFO at forward_capacity) -> dispatch ->
/// response transfer backend -> client over the backend link -> complete.
class Simulation {
 public:
  using Callback = std::function<void(const RequestRecord&)>;

  Simulation(SystemConfig config, std::uint64_t seed);

  /// Starts a request from `client` at the current virtual time.
  std::uint64_t issue(std::size_t client, Callback done);

  /// Schedules a fault; throws UnknownBackend / SchemaError for bad names.
  void schedule_control(const ControlEvent& event);

  Engine& engine() noexcept { return engine_; }
  SelectorGroup& selectors() noexcept { return selectors_; }
  std::size_t balancer_count() const noexcept { return balancers_.size(); }
  BalancerNode& balancer(std::size_t i) { return *balancers_.at(i); }
  const BalancerNode& balancer(std::size_t i) const { return *balancers_.at(i); }
  const ServerLink& link(BackendId id) const { return *links_.at(id); }
  const SystemConfig& config() const noexcept { return config_; }

  /// Requests issued but not yet finished (successfully or not).
  std::uint64_t in_flight() const noexcept { return active_.size(); }
  std::uint64_t client_bytes() const noexcept { return client_bytes_; }
  std::uint64_t completed_page_bytes() const noexcept { return completed_page_bytes_; }

 private:
  struct Active {
    RequestRecord record;
    Callback done;
    std::size_t balancer = 0;
    std::uint64_t page = 0;
  };

  void after_resolution(std::uint64_t id);
  void at_balancer(std::uint64_t id);
  void dispatch(std::uint64_t id);
  void start_transfer(std::uint64_t id);
  void transfer_done(std::uint64_t id);
  void finish(std::uint64_t id, bool ok, std::string failure = {});
  void probe_tick();
  void ensure_probing();
  std::uint64_t page_bytes(std::uint64_t base);

  SystemConfig config_;
  Engine engine_;
  SelectorGroup selectors_;
  std::vector<std::unique_ptr<BalancerNode>> balancers_;
  std::vector<double> admission_free_at_;
  std::map<std::string, std::size_t> balancer_by_vip_;
  std::map<BackendId, std::unique_ptr<ServerLink>> links_;
  std::map<BackendId, bool> alive_;
  std::map<std::size_t, std::string> agent_cache_;
  std::map<std::uint64_t, Active> active_;
  std::mt19937_64 rng_;
  std::uint64_t next_id_ = 1;
  std::uint64_t client_bytes_ = 0;
  std::uint64_t completed_page_bytes_ = 0;
  bool probe_scheduled_ = false;
};

}  // namespace gslb::sim
