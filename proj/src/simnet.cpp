#include "gslb/simnet.hpp"

#include <algorithm>
#include <cmath>

#include "gslb/error.hpp"

namespace gslb::sim {

std::string_view event_kind_name(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Arrival: return "arrival";
    case EventKind::ResolutionDone: return "resolution_done";
    case EventKind::DispatchDone: return "dispatch_done";
    case EventKind::TransferDone: return "transfer_done";
    case EventKind::ProbeTick: return "probe_tick";
    case EventKind::Control: return "control";
  }
  return "?";
}

// ---------------------------------------------------------------- Engine

std::uint64_t Engine::schedule(double time, EventKind kind, std::uint64_t ref, Handler handler) {
  if (!(time >= now_)) {
    throw Error(Errc::TimeReversal, "event at t=" + std::to_string(time) +
                                        " scheduled while clock is at " + std::to_string(now_));
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push_back(Event{time, seq, kind, ref, std::move(handler)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
  return seq;
}

std::optional<double> Engine::next_time() const noexcept {
  if (queue_.empty()) return std::nullopt;
  return queue_.front().time;
}

bool Engine::step() {
  if (queue_.empty()) return false;
  std::pop_heap(queue_.begin(), queue_.end(), Later{});
  Event ev = std::move(queue_.back());
  queue_.pop_back();
  now_ = ev.time;
  if (logging_) log_.push_back({ev.time, ev.seq, ev.kind, ev.ref});
  if (ev.handler) ev.handler();
  return true;
}

void Engine::run_until(double t_end) {
  while (!queue_.empty() && queue_.front().time <= t_end) step();
  now_ = std::max(now_, t_end);
}

void Engine::run() {
  while (step()) {
  }
}

// ------------------------------------------------------------ ServerLink

ServerLink::ServerLink(double capacity, std::uint64_t ref) : capacity_(capacity), ref_(ref) {
  if (!(capacity > 0)) throw Error(Errc::SchemaError, "link capacity must be > 0");
}

const Flow* ServerLink::flow(FlowId id) const noexcept {
  for (const auto& a : flows_) {
    if (a.flow.id == id) return &a.flow;
  }
  return nullptr;
}

void ServerLink::advance(double now) {
  if (flows_.empty()) return;
  const double rate = capacity_ / static_cast<double>(flows_.size());
  for (auto& a : flows_) {
    const double elapsed = now - a.flow.last_update;
    a.flow.remaining_bytes = std::max(0.0, a.flow.remaining_bytes - rate * elapsed);
    a.flow.last_update = now;
  }
}

void ServerLink::replan(Engine& engine) {
  ++generation_;
  if (flows_.empty()) return;
  const double rate = capacity_ / static_cast<double>(flows_.size());
  double min_remaining = flows_.front().flow.remaining_bytes;
  for (const auto& a : flows_) min_remaining = std::min(min_remaining, a.flow.remaining_bytes);
  const std::uint64_t gen = generation_;
  engine.schedule(engine.now() + min_remaining / rate, EventKind::TransferDone, ref_,
                  [this, &engine, gen] { on_timer(engine, gen); });
}

void ServerLink::join(Engine& engine, FlowId id, double bytes, DoneFn on_done) {
  advance(engine.now());
  flows_.push_back({Flow{id, bytes, bytes, engine.now()}, std::move(on_done)});
  replan(engine);
}

void ServerLink::leave(Engine& engine, FlowId id) {
  auto it = std::find_if(flows_.begin(), flows_.end(),
                         [id](const Active& a) { return a.flow.id == id; });
  if (it == flows_.end()) return;
  advance(engine.now());
  delivered_ += it->flow.total_bytes - it->flow.remaining_bytes;
  flows_.erase(it);
  replan(engine);
}

void ServerLink::on_timer(Engine& engine, std::uint64_t generation) {
  if (generation != generation_ || flows_.empty()) return;  // superseded plan
  advance(engine.now());

  // The planned flow has reached zero up to rounding; flows tied with it
  // finish at the same instant.
  double min_remaining = flows_.front().flow.remaining_bytes;
  for (const auto& a : flows_) min_remaining = std::min(min_remaining, a.flow.remaining_bytes);
  std::vector<Active> done;
  std::vector<Active> keep;
  for (auto& a : flows_) {
    const double tol = 1e-9 * std::max(1.0, a.flow.total_bytes);
    if (a.flow.remaining_bytes <= tol || a.flow.remaining_bytes <= min_remaining) {
      a.flow.remaining_bytes = 0.0;
      done.push_back(std::move(a));
    } else {
      keep.push_back(std::move(a));
    }
  }
  flows_ = std::move(keep);
  for (const auto& a : done) delivered_ += a.flow.total_bytes;
  replan(engine);
  for (auto& a : done) {
    if (a.on_done) a.on_done(a.flow.id);
  }
}

// ------------------------------------------------------------ Simulation

std::string client_address(std::size_t client) {
  return "10." + std::to_string((client >> 16) & 0xff) + "." + std::to_string((client >> 8) & 0xff) +
         "." + std::to_string(client & 0xff);
}

Simulation::Simulation(SystemConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  if (config_.balancers.empty()) {
    throw Error(Errc::SchemaError, "app " + config_.app_id + " has no balancers");
  }
  if (config_.selector_ids.empty()) {
    throw Error(Errc::SchemaError, "app " + config_.app_id + " has no selectors");
  }
  const auto& l = config_.latencies;
  if (l.client_selector < 0 || l.client_balancer < 0 || l.balancer_backend < 0) {
    throw Error(Errc::SchemaError, "latencies must be >= 0");
  }
  if (config_.page_jitter < 0 || config_.page_jitter >= 1) {
    throw Error(Errc::SchemaError, "page_jitter must be in [0, 1)");
  }

  ClusterSpec cluster = make_cluster(config_.app_id, config_.backends);
  for (const auto& b : cluster.backends) {
    links_.emplace(b.id, std::make_unique<ServerLink>(b.capacity, b.id));
    alive_[b.id] = true;
  }

  std::vector<std::string> slaves(config_.selector_ids.begin() + 1, config_.selector_ids.end());
  selectors_ = SelectorGroup(config_.selector_ids.front(), std::move(slaves));

  for (const auto& spec : config_.balancers) {
    BalancerNode::Config bc;
    bc.vip = spec.vip;
    bc.scheduler = spec.scheduler;
    bc.forward_capacity = spec.forward_capacity;
    bc.mode = config_.mode;
    bc.probe = config_.probe;
    if (balancer_by_vip_.contains(spec.vip)) {
      throw Error(Errc::DuplicateAddress, "balancer vip " + spec.vip + " used twice");
    }
    balancer_by_vip_[spec.vip] = balancers_.size();
    balancers_.push_back(std::make_unique<BalancerNode>(bc, cluster));
    admission_free_at_.push_back(0.0);
    selectors_.register_balancer(config_.app_id, spec.vip);
  }
}

std::uint64_t Simulation::page_bytes(std::uint64_t base) {
  if (config_.page_jitter == 0.0) return base;
  // 53 random mantissa bits; avoids implementation-defined distributions.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double scaled = static_cast<double>(base) * (1.0 + config_.page_jitter * (2.0 * u - 1.0));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(scaled)));
}

std::uint64_t Simulation::issue(std::size_t client, Callback done) {
  const std::uint64_t id = next_id_++;
  Active a;
  a.record.id = id;
  a.record.client = client;
  a.record.issue_time = engine_.now();
  a.done = std::move(done);
  active_.emplace(id, std::move(a));
  ensure_probing();

  Active& act = active_.at(id);
  std::string address;
  if (config_.resolve_cache == ResolveCache::PerAgent) {
    if (auto it = agent_cache_.find(client); it != agent_cache_.end()) address = it->second;
  }
  if (address.empty()) {
    try {
      Resolution r = selectors_.resolve(config_.app_id);
      act.record.selector_node = r.node_index;
      address = std::move(r.address);
      if (config_.resolve_cache == ResolveCache::PerAgent) agent_cache_[client] = address;
    } catch (const Error& e) {
      act.record.resolution_failed = true;
      engine_.schedule_in(config_.latencies.client_selector, EventKind::ResolutionDone, id,
                          [this, id, msg = std::string(errc_name(e.code()))] {
                            finish(id, false, msg);
                          });
      return id;
    }
  }
  act.balancer = balancer_by_vip_.at(address);
  act.record.balancer_vip = address;
  engine_.schedule_in(config_.latencies.client_selector, EventKind::ResolutionDone, id,
                      [this, id] { after_resolution(id); });
  return id;
}

void Simulation::after_resolution(std::uint64_t id) {
  engine_.schedule_in(config_.latencies.client_balancer, EventKind::Arrival, id,
                      [this, id] { at_balancer(id); });
}

void Simulation::at_balancer(std::uint64_t id) {
  Active& act = active_.at(id);
  BalancerNode& lb = *balancers_[act.balancer];
  lb.receive(Request{id, config_.app_id, client_address(act.record.client), 0});
  // FIFO admission drained at forward_capacity requests per second.
  double& free_at = admission_free_at_[act.balancer];
  const double start = std::max(engine_.now(), free_at);
  free_at = start + 1.0 / lb.config().forward_capacity;
  engine_.schedule(free_at, EventKind::DispatchDone, id, [this, id] { dispatch(id); });
}

void Simulation::dispatch(std::uint64_t id) {
  Active& act = active_.at(id);
  BalancerNode& lb = *balancers_[act.balancer];
  try {
    Assignment a = lb.dispatch(Request{id, config_.app_id, client_address(act.record.client), 0},
                               engine_.now());
    act.record.backend = a.backend_id;
    act.page = page_bytes(find_backend(lb.cluster(), a.backend_id)->page_size);
  } catch (const Error& e) {
    finish(id, false, std::string(errc_name(e.code())));
    return;
  }
  engine_.schedule_in(config_.latencies.balancer_backend, EventKind::Arrival, id,
                      [this, id] { start_transfer(id); });
}

void Simulation::start_transfer(std::uint64_t id) {
  Active& act = active_.at(id);
  if (!alive_.at(act.record.backend)) {
    balancers_[act.balancer]->complete(id, 0);
    finish(id, false, "BackendDown");
    return;
  }
  links_.at(act.record.backend)
      ->join(engine_, id, static_cast<double>(act.page), [this](FlowId f) { transfer_done(f); });
}

void Simulation::transfer_done(std::uint64_t id) {
  Active& act = active_.at(id);
  act.record.bytes = act.page;
  balancers_[act.balancer]->complete(id, act.page);
  client_bytes_ += act.page;
  finish(id, true);
}

void Simulation::finish(std::uint64_t id, bool ok, std::string failure) {
  auto node = active_.extract(id);
  Active& act = node.mapped();
  act.record.ok = ok;
  act.record.failure = std::move(failure);
  act.record.completion_time = engine_.now();
  if (ok) completed_page_bytes_ += act.page;
  if (act.done) act.done(act.record);
}

void Simulation::schedule_control(const ControlEvent& event) {
  const Health h = event.up ? Health::Up : Health::Down;
  if (event.component == "selector-master" || event.component == "selector-slave") {
    const std::size_t index = event.component == "selector-master" ? 0 : 1;
    if (index >= selectors_.nodes().size()) {
      throw Error(Errc::SchemaError, "no " + event.component + " in this deployment");
    }
    engine_.schedule(event.at, EventKind::Control, index,
                     [this, index, h] { selectors_.set_health(index, h); });
    return;
  }
  constexpr std::string_view kBackend = "backend-";
  if (event.component.starts_with(kBackend)) {
    const BackendId id =
        static_cast<BackendId>(std::stoul(event.component.substr(kBackend.size())));
    if (!alive_.contains(id)) throw Error(Errc::UnknownBackend, event.component);
    const bool up = event.up;
    engine_.schedule(event.at, EventKind::Control, id, [this, id, up] {
      alive_[id] = up;
      if (up) return;
      // Transfers in progress on a dead server are lost.
      std::vector<std::uint64_t> victims;
      for (const auto& [rid, act] : active_) {
        if (act.record.backend == id && links_.at(id)->flow(rid) != nullptr) victims.push_back(rid);
      }
      for (auto rid : victims) {
        links_.at(id)->leave(engine_, rid);
        balancers_[active_.at(rid).balancer]->complete(rid, 0);
        finish(rid, false, "BackendDown");
      }
    });
    return;
  }
  throw Error(Errc::SchemaError, "unknown component '" + event.component + "'");
}

void Simulation::ensure_probing() {
  if (!config_.probing || probe_scheduled_) return;
  probe_scheduled_ = true;
  engine_.schedule_in(config_.probe.interval, EventKind::ProbeTick, 0, [this] { probe_tick(); });
}

void Simulation::probe_tick() {
  probe_scheduled_ = false;
  std::vector<ProbeResult> results;
  for (const auto& [id, up] : alive_) results.push_back({id, up});
  for (auto& lb : balancers_) lb->probe_tick(results);
  if (!active_.empty()) ensure_probing();
}

}  // namespace gslb::sim
