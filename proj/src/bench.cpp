#include "gslb/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "gslb/error.hpp"

namespace gslb::bench {

void validate(const AbSpec& spec) {
  if (spec.concurrency < 1 || spec.n_requests < spec.concurrency) {
    throw Error(Errc::SchemaError, "ab workload needs n_requests >= concurrency >= 1");
  }
  if (spec.repeats < 1) throw Error(Errc::SchemaError, "ab workload needs repeats >= 1");
}

void validate(const DurationSpec& spec) {
  if (spec.agents < 1) throw Error(Errc::SchemaError, "duration workload needs agents >= 1");
  if (!(spec.duration > 0)) throw Error(Errc::SchemaError, "duration must be > 0");
  if (spec.ramp_up < 0 || spec.think_time < 0) {
    throw Error(Errc::SchemaError, "ramp_up and think_time must be >= 0");
  }
}

std::uint64_t pages_per_minute(std::uint64_t total_requests, double duration_seconds) {
  if (!(duration_seconds > 0)) return 0;
  double whole = 0.0;
  if (std::modf(duration_seconds, &whole) == 0.0) {
    return total_requests * 60 / static_cast<std::uint64_t>(whole);
  }
  return static_cast<std::uint64_t>(
      std::floor(static_cast<long double>(total_requests) * 60.0L / duration_seconds));
}

namespace {

std::string ab_key(const AbSpec& s) {
  return "ab n_requests=" + std::to_string(s.n_requests) +
         " concurrency=" + std::to_string(s.concurrency) + " app=" + s.app_id;
}

std::string duration_key(const DurationSpec& s) {
  std::ostringstream out;
  out.precision(17);
  out << "duration agents=" << s.agents << " duration=" << s.duration << " ramp_up=" << s.ramp_up
      << " think_time=" << s.think_time << " app=" << s.app_id;
  return out.str();
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

// Shared bookkeeping for both load generators.
struct Collector {
  sim::Simulation& sim;
  std::vector<sim::RequestRecord> records;
  std::uint64_t issued = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t max_in_flight = 0;

  void on_issue() {
    ++issued;
    ++in_flight;
    max_in_flight = std::max(max_in_flight, in_flight);
  }

  RunReport build(std::string workload, std::string key) const {
    RunReport r;
    r.workload = std::move(workload);
    r.spec_key = std::move(key);
    r.issued = issued;
    r.max_in_flight = max_in_flight;
    double last = 0.0;
    std::vector<double> latencies;
    for (const auto& rec : records) {
      last = std::max(last, rec.completion_time);
      if (rec.ok) {
        ++r.total_requests;
        latencies.push_back(rec.completion_time - rec.issue_time);
        ++r.backend_hits[std::to_string(rec.backend)];
        ++r.balancer_hits[rec.balancer_vip];
      } else {
        ++r.failures;
        if (rec.resolution_failed) ++r.resolution_failures;
      }
      if (!rec.resolution_failed) {
        ++r.selector_hits[std::string(sim.selectors().nodes()[rec.selector_node].node_id)];
      }
    }
    r.total_time = last;
    std::sort(latencies.begin(), latencies.end());
    if (!latencies.empty()) {
      double sum = 0.0;
      for (double l : latencies) sum += l;
      r.latency_mean = sum / static_cast<double>(latencies.size());
      r.latency_p50 = nearest_rank(latencies, 0.50);
      r.latency_p95 = nearest_rank(latencies, 0.95);
      r.latency_max = latencies.back();
    }
    r.client_bytes = sim.client_bytes();
    r.completed_page_bytes = sim.completed_page_bytes();
    for (std::size_t i = 0; i < sim.balancer_count(); ++i) {
      const BalancerNode& lb = sim.balancer(i);
      r.balancers.push_back({lb.vip(), std::string(scheduler_short_name(lb.scheduler())),
                             lb.counters(), lb.counters_consistent()});
    }
    return r;
  }
};

}  // namespace

RunReport run_ab_once(const AbSpec& spec, const sim::SystemConfig& system, std::uint64_t seed,
                      std::span<const sim::ControlEvent> faults) {
  validate(spec);
  sim::Simulation sim(system, seed);
  sim.engine().set_logging(false);
  for (const auto& f : faults) sim.schedule_control(f);

  Collector c{sim, {}, 0, 0, 0};
  std::function<void(std::size_t)> start = [&](std::size_t agent) {
    c.on_issue();
    sim.issue(agent, [&, agent](const sim::RequestRecord& rec) {
      --c.in_flight;
      c.records.push_back(rec);
      if (c.issued < spec.n_requests) start(agent);
    });
  };
  // Closed loop: every agent starts at t=0 and reissues on each completion.
  for (std::size_t agent = 0; agent < spec.concurrency; ++agent) start(agent);
  sim.engine().run();

  RunReport r = c.build("ab", ab_key(spec));
  r.n_requests = spec.n_requests;
  r.concurrency = spec.concurrency;
  if (r.total_requests == 0) {
    throw Error(Errc::SystemUnavailable, "no request completed for app " + spec.app_id);
  }
  r.resp_time = r.total_time / static_cast<double>(r.n_requests);
  r.avg_resp_time = r.resp_time;
  self_check(r);
  return r;
}

RunReport run_ab(const AbSpec& spec, const sim::SystemConfig& system, std::uint64_t seed,
                 std::span<const sim::ControlEvent> faults) {
  validate(spec);
  std::vector<RunReport> runs;
  runs.reserve(spec.repeats);
  for (std::uint64_t i = 0; i < spec.repeats; ++i) {
    runs.push_back(run_ab_once(spec, system, seed + i, faults));
  }
  return aggregate_repeats(runs);
}

RunReport run_duration(const DurationSpec& spec, const sim::SystemConfig& system,
                       std::uint64_t seed, std::span<const sim::ControlEvent> faults) {
  validate(spec);
  sim::Simulation sim(system, seed);
  sim.engine().set_logging(false);
  for (const auto& f : faults) sim.schedule_control(f);

  Collector c{sim, {}, 0, 0, 0};
  std::function<void(std::size_t)> start = [&](std::size_t agent) {
    if (sim.engine().now() >= spec.duration) return;
    c.on_issue();
    sim.issue(agent, [&, agent](const sim::RequestRecord& rec) {
      --c.in_flight;
      c.records.push_back(rec);
      if (spec.think_time > 0) {
        sim.engine().schedule_in(spec.think_time, sim::EventKind::Arrival, agent,
                                 [&start, agent] { start(agent); });
      } else {
        start(agent);
      }
    });
  };
  for (std::size_t agent = 0; agent < spec.agents; ++agent) {
    const double at = spec.ramp_up * static_cast<double>(agent) / static_cast<double>(spec.agents);
    sim.engine().schedule(at, sim::EventKind::Arrival, agent, [&start, agent] { start(agent); });
  }
  sim.engine().run_until(spec.duration);

  RunReport r = c.build("duration", duration_key(spec));
  r.duration = spec.duration;
  r.concurrency = spec.agents;
  r.discarded = c.in_flight;
  if (r.total_requests == 0) {
    throw Error(Errc::SystemUnavailable, "no request completed for app " + spec.app_id);
  }
  r.n_requests = r.total_requests;
  r.resp_time = r.total_time / static_cast<double>(r.n_requests);
  r.avg_resp_time = r.resp_time;
  r.throughput = pages_per_minute(r.total_requests, spec.duration);
  self_check(r);
  return r;
}

RunReport aggregate_repeats(std::span<const RunReport> reports) {
  if (reports.empty()) throw Error(Errc::MixedSpecs, "nothing to aggregate");
  const RunReport& first = reports.front();
  if (reports.size() == 1) return first;

  RunReport out;
  out.workload = first.workload;
  out.spec_key = first.spec_key;
  out.n_requests = first.n_requests;
  out.concurrency = first.concurrency;
  out.duration = first.duration;
  out.repeats = 0;
  bool same_n = true;
  // Means are taken as offsets from the first run so identical repeats
  // average to exactly their common value.
  double total = 0.0, resp = 0.0, p50 = 0.0, p95 = 0.0, weighted_latency = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RunReport& r = reports[i];
    if (r.spec_key != first.spec_key) {
      throw Error(Errc::MixedSpecs, "cannot merge '" + r.spec_key + "' into '" + first.spec_key + "'");
    }
    same_n = same_n && r.n_requests == first.n_requests;
    out.repeats += r.repeats;
    total += r.total_time - first.total_time;
    resp += r.avg_resp_time - first.avg_resp_time;
    p50 += r.latency_p50 - first.latency_p50;
    p95 += r.latency_p95 - first.latency_p95;
    weighted_latency += r.latency_mean * static_cast<double>(r.total_requests);
    out.latency_max = std::max(out.latency_max, r.latency_max);
    out.issued += r.issued;
    out.total_requests += r.total_requests;
    out.failures += r.failures;
    out.resolution_failures += r.resolution_failures;
    out.discarded += r.discarded;
    out.max_in_flight = std::max(out.max_in_flight, r.max_in_flight);
    for (const auto& [k, v] : r.backend_hits) out.backend_hits[k] += v;
    for (const auto& [k, v] : r.balancer_hits) out.balancer_hits[k] += v;
    for (const auto& [k, v] : r.selector_hits) out.selector_hits[k] += v;
    out.client_bytes += r.client_bytes;
    out.completed_page_bytes += r.completed_page_bytes;
    if (i == 0) {
      out.balancers = r.balancers;
    } else {
      for (std::size_t b = 0; b < out.balancers.size() && b < r.balancers.size(); ++b) {
        auto& dst = out.balancers[b];
        const auto& src = r.balancers[b];
        dst.consistent = dst.consistent && src.consistent;
        dst.counters.requests_in += src.counters.requests_in;
        dst.counters.requests_dispatched += src.counters.requests_dispatched;
        dst.counters.requests_rejected += src.counters.requests_rejected;
        dst.counters.requests_completed += src.counters.requests_completed;
        dst.counters.bytes_request_in += src.counters.bytes_request_in;
        dst.counters.bytes_request_out += src.counters.bytes_request_out;
        dst.counters.bytes_response_out += src.counters.bytes_response_out;
        dst.counters.bytes_direct_to_client += src.counters.bytes_direct_to_client;
      }
    }
    for (const auto& f : r.check_failures) {
      out.check_failures.push_back("repeat " + std::to_string(i) + ": " + f);
    }
  }
  const auto k = static_cast<double>(reports.size());
  out.total_time = first.total_time + total / k;
  out.avg_resp_time = first.avg_resp_time + resp / k;
  out.latency_p50 = first.latency_p50 + p50 / k;
  out.latency_p95 = first.latency_p95 + p95 / k;
  if (out.total_requests > 0) {
    out.latency_mean = weighted_latency / static_cast<double>(out.total_requests);
  }
  if (!same_n) out.n_requests = out.total_requests / out.repeats;
  out.resp_time = out.total_time / static_cast<double>(std::max<std::uint64_t>(1, out.n_requests));
  if (out.workload == "duration") {
    out.throughput = pages_per_minute(out.total_requests, out.duration * static_cast<double>(out.repeats));
  }
  return out;
}

void self_check(RunReport& r) {
  auto fail = [&](const std::string& what) { r.check_failures.push_back(what); };
  if (r.client_bytes != r.completed_page_bytes) {
    fail("client bytes " + std::to_string(r.client_bytes) + " != completed page bytes " +
         std::to_string(r.completed_page_bytes));
  }
  std::uint64_t delivered = 0;
  for (const auto& b : r.balancers) {
    if (!b.consistent) fail("balancer " + b.vip + " counters violate conservation");
    delivered += b.counters.bytes_direct_to_client + b.counters.bytes_response_out;
  }
  if (!r.balancers.empty() && delivered != r.client_bytes) {
    fail("balancer byte accounting " + std::to_string(delivered) + " != client bytes " +
         std::to_string(r.client_bytes));
  }
  if (r.issued != r.total_requests + r.failures + r.discarded) {
    fail("issued != completed + failed + discarded");
  }
  if (r.workload == "ab") {
    if (r.max_in_flight > r.concurrency) fail("in-flight requests exceeded concurrency");
    if (r.issued != r.n_requests * r.repeats) fail("issued != n_requests");
  }
  if (r.n_requests > 0 && r.resp_time != r.total_time / static_cast<double>(r.n_requests)) {
    fail("resp_time != total_time / n_requests");
  }
  if (r.workload == "duration" && r.throughput != pages_per_minute(r.total_requests, r.duration)) {
    fail("throughput != floor(total_requests * 60 / duration)");
  }
}

}  // namespace gslb::bench
