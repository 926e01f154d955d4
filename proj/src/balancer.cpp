#include "gslb/balancer.hpp"

#include <algorithm>

#include "gslb/error.hpp"

namespace gslb {

std::string_view forwarding_mode_name(ForwardingMode mode) noexcept {
  return mode == ForwardingMode::DirectRouting ? "direct_routing" : "proxy";
}

BalancerNode::BalancerNode(Config config, ClusterSpec cluster)
    : config_(std::move(config)), cluster_(std::move(cluster)) {
  validate(cluster_);
  if (!(config_.forward_capacity > 0)) {
    throw Error(Errc::SchemaError, "balancer " + config_.vip + ": forward_capacity must be > 0");
  }
  const auto& p = config_.probe;
  if (!(p.interval > 0) || p.fail_threshold == 0 || p.rise_threshold == 0) {
    throw Error(Errc::SchemaError, "balancer " + config_.vip + ": probe settings must be positive");
  }
  for (const auto& b : cluster_.backends) streaks_[b.id] = {};
  reconcile();
}

void BalancerNode::receive(const Request& request) {
  if (waiting_.contains(request.id)) return;
  waiting_.insert(request.id);
  ++counters_.requests_in;
  counters_.bytes_request_in += request.bytes;
}

Assignment BalancerNode::dispatch(const Request& request, double now) {
  receive(request);
  waiting_.erase(request.id);

  if (config_.enforce_admission) {
    const double burst = std::max(1.0, config_.forward_capacity);
    if (!tokens_init_) {
      tokens_ = burst;
      tokens_at_ = now;
      tokens_init_ = true;
    }
    tokens_ = std::min(burst, tokens_ + (now - tokens_at_) * config_.forward_capacity);
    tokens_at_ = std::max(tokens_at_, now);
    if (tokens_ < 1.0) {
      ++counters_.requests_rejected;
      throw Error(Errc::Overloaded, "balancer " + config_.vip + " is above forward capacity");
    }
    tokens_ -= 1.0;
  }

  const std::vector<Backend> pool = healthy_pool(cluster_);
  if (pool.empty()) {
    ++counters_.requests_rejected;
    throw Error(Errc::NoHealthyBackend, "balancer " + config_.vip + " has no healthy backend");
  }
  const BackendId id = pick(config_.scheduler, state_, request.source, pool);
  Backend* backend = find_backend(cluster_, id);
  note_connect(*backend);

  ++counters_.requests_dispatched;
  counters_.bytes_request_out += request.bytes;
  Assignment a{request.id, id, backend->address, now};
  assignments_[request.id] = a;
  return a;
}

void BalancerNode::complete(std::uint64_t request_id, std::uint64_t response_bytes) {
  auto it = assignments_.find(request_id);
  if (it == assignments_.end()) {
    throw Error(Errc::UnknownAssignment,
                "request " + std::to_string(request_id) + " is not outstanding on " + config_.vip);
  }
  note_close(*find_backend(cluster_, it->second.backend_id));
  assignments_.erase(it);
  ++counters_.requests_completed;
  if (config_.mode == ForwardingMode::DirectRouting) {
    counters_.bytes_direct_to_client += response_bytes;
  } else {
    counters_.bytes_response_out += response_bytes;
  }
}

std::vector<HealthTransition> BalancerNode::probe_tick(std::span<const ProbeResult> results) {
  std::vector<HealthTransition> transitions;
  for (const auto& r : results) {
    Backend* backend = find_backend(cluster_, r.id);
    if (backend == nullptr) {
      throw Error(Errc::UnknownBackend, "probe result for unknown backend " + std::to_string(r.id));
    }
    ProbeStreak& s = streaks_[r.id];
    if (r.ok) {
      s.failures = 0;
      ++s.successes;
      if (backend->health == Health::Down && s.successes >= config_.probe.rise_threshold) {
        backend->health = Health::Up;
        transitions.push_back({r.id, Health::Up});
      }
    } else {
      s.successes = 0;
      ++s.failures;
      if (backend->health == Health::Up && s.failures >= config_.probe.fail_threshold) {
        backend->health = Health::Down;
        transitions.push_back({r.id, Health::Down});
      }
    }
  }
  if (!transitions.empty()) reconcile();
  return transitions;
}

void BalancerNode::set_health(BackendId id, Health health) {
  Backend* backend = find_backend(cluster_, id);
  if (backend == nullptr) {
    throw Error(Errc::UnknownBackend, "no backend " + std::to_string(id));
  }
  if (backend->health == health) return;
  backend->health = health;
  streaks_[id] = {};
  reconcile();
}

const ProbeStreak& BalancerNode::streak(BackendId id) const {
  auto it = streaks_.find(id);
  if (it == streaks_.end()) throw Error(Errc::UnknownBackend, "no backend " + std::to_string(id));
  return it->second;
}

bool BalancerNode::counters_consistent() const noexcept {
  const auto& c = counters_;
  if (c.requests_in != c.requests_dispatched + c.requests_rejected + in_flight()) return false;
  if (c.requests_completed + assignments_.size() != c.requests_dispatched) return false;
  if (config_.mode == ForwardingMode::DirectRouting && c.bytes_response_out != 0) return false;
  return true;
}

void BalancerNode::reconcile() { on_pool_change(state_, healthy_pool(cluster_)); }

}  // namespace gslb
