#include "gslb/live.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "gslb/error.hpp"

namespace gslb::live {

// ---------------------------------------------------------------- Deployment

Deployment::Deployment(const cli::ScenarioFile& scenario)
    : selectors_(std::make_shared<wire::SharedSelectors>()) {
  std::vector<std::string> slaves;
  if (!scenario.selectors.slave.empty()) slaves.push_back(scenario.selectors.slave);
  selectors_->group = SelectorGroup(scenario.selectors.master, slaves);

  resolvers_.push_back({"selector-master", std::make_unique<wire::ResolverService>(
                                               selectors_, 0,
                                               net::parse_host_port(scenario.selectors.master))});
  if (!slaves.empty()) {
    resolvers_.push_back({"selector-slave", std::make_unique<wire::ResolverService>(
                                                selectors_, 1, net::parse_host_port(slaves[0]))});
  }

  for (std::size_t a = 0; a < scenario.apps.size(); ++a) {
    const cli::AppSpec& app = scenario.apps[a];
    std::vector<Backend> backends = app.backends;
    for (std::size_t i = 0; i < backends.size(); ++i) {
      backends[i].address = cli::backend_address(scenario, a, i);
      webs_.push_back({"backend-" + app.app_id + "-" + std::to_string(backends[i].id),
                       std::make_unique<wire::BackendServer>(
                           wire::make_static_site(backends[i].id, backends[i].page_size),
                           net::parse_host_port(backends[i].address))});
    }
    ClusterSpec cluster = make_cluster(app.app_id, backends);
    for (std::size_t k = 0; k < app.balancers.size(); ++k) {
      const auto& spec = app.balancers[k];
      BalancerNode::Config cfg;
      cfg.vip = spec.vip;
      cfg.scheduler = spec.scheduler;
      cfg.forward_capacity = spec.forward_capacity;
      cfg.mode = ForwardingMode::Proxy;
      cfg.probe = scenario.probe;
      cfg.enforce_admission = true;
      auto shared = std::make_shared<wire::SharedBalancer>(BalancerNode(cfg, cluster));
      selectors_->group.register_balancer(app.app_id, spec.vip);
      Proxy p;
      p.id = "balancer-" + app.app_id + "-" + std::to_string(k + 1);
      p.app_id = app.app_id;
      p.balancer = shared;
      p.service = std::make_unique<wire::ProxyService>(shared, net::parse_host_port(spec.vip));
      p.probe = std::make_unique<wire::ProbeLoop>(shared, scenario.probe);
      proxies_.push_back(std::move(p));
    }
  }
}

Deployment::~Deployment() { stop(); }

void Deployment::start() {
  try {
    for (auto& w : webs_) w.server->start();
    for (auto& p : proxies_) {
      p.service->start();
      p.probe->start();
    }
    for (auto& r : resolvers_) r.service->start();
  } catch (...) {
    stop();
    throw;
  }
}

void Deployment::stop() {
  for (auto& r : resolvers_) r.service->stop();
  for (auto& p : proxies_) {
    p.probe->stop();
    p.service->stop();
  }
  for (auto& w : webs_) w.server->stop();
}

std::vector<Component> Deployment::components() const {
  std::vector<Component> out;
  for (const auto& r : resolvers_) {
    out.push_back({r.id, "resolver", r.service->address().str(), r.service->running()});
  }
  for (const auto& p : proxies_) {
    out.push_back({p.id, "proxy", p.service->address().str(), p.service->running()});
  }
  for (const auto& w : webs_) {
    out.push_back({w.id, "backend", w.server->address().str(), w.server->running()});
  }
  return out;
}

void Deployment::kill(const std::string& id) {
  for (auto& r : resolvers_) {
    if (r.id == id) return r.service->stop();
  }
  for (auto& p : proxies_) {
    if (p.id == id) {
      p.probe->stop();
      return p.service->stop();
    }
  }
  for (auto& w : webs_) {
    if (w.id == id) return w.server->stop();
  }
  throw Error(Errc::SchemaError, "unknown component '" + id + "'");
}

void Deployment::revive(const std::string& id) {
  for (auto& r : resolvers_) {
    if (r.id == id) return r.service->start();
  }
  for (auto& p : proxies_) {
    if (p.id == id) {
      p.service->start();
      return p.probe->start();
    }
  }
  for (auto& w : webs_) {
    if (w.id == id) return w.server->start();
  }
  throw Error(Errc::SchemaError, "unknown component '" + id + "'");
}

std::shared_ptr<wire::SharedBalancer> Deployment::balancer(const std::string& app_id,
                                                           std::size_t index) const {
  std::size_t seen = 0;
  for (const auto& p : proxies_) {
    if (p.app_id == app_id && seen++ == index) return p.balancer;
  }
  throw Error(Errc::UnknownApp, "no balancer " + std::to_string(index) + " for " + app_id);
}

// ------------------------------------------------------------ ControlService

ControlService::ControlService(Deployment& deployment, net::HostPort listen,
                               std::function<void()> on_shutdown)
    : deployment_(deployment), listen_(std::move(listen)), on_shutdown_(std::move(on_shutdown)) {}

ControlService::~ControlService() { stop(); }

std::string ControlService::handle(const std::string& raw) {
  std::string line = raw;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  std::istringstream in(line);
  std::string verb, arg;
  in >> verb >> arg;
  try {
    if (verb == "KILL" && !arg.empty()) {
      deployment_.kill(arg);
      return "OK killed " + arg;
    }
    if (verb == "REVIVE" && !arg.empty()) {
      deployment_.revive(arg);
      return "OK revived " + arg;
    }
    if (verb == "STATUS") {
      std::string out = "OK";
      for (const auto& c : deployment_.components()) {
        out += " " + c.id + "=" + c.address + (c.running ? ":up" : ":down");
      }
      return out;
    }
    if (verb == "SHUTDOWN") {
      if (on_shutdown_) on_shutdown_();
      return "OK shutting down";
    }
  } catch (const Error& e) {
    return std::string("ERR ") + e.what();
  }
  return "ERR MALFORMED";
}

void ControlService::start() {
  listener_ = net::Listener::bind(listen_);
  running_ = true;
  thread_ = std::thread([this] {
    while (running_) {
      auto sock = listener_.accept(0.05);
      if (!sock) continue;
      auto line = net::read_line(*sock, 2.0);
      const std::string reply = line ? handle(*line) : "ERR MALFORMED";
      net::send_all(*sock, reply + "\n", 2.0);
    }
  });
}

void ControlService::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  listener_.close();
}

std::optional<std::string> send_control(const net::HostPort& control, const std::string& command) {
  return net::exchange_line(control, command + "\n", 10.0);
}

// ------------------------------------------------------------------ bench

namespace {

using Clock = std::chrono::steady_clock;

struct LiveRecord {
  double issue = 0.0;
  double done = 0.0;
  bool ok = false;
  bool resolution_failed = false;
  bool from_slave = false;
  double resolve_time = 0.0;
  std::string balancer;
  std::string token;
  std::uint64_t bytes = 0;
};

LiveRecord one_request(const LiveTarget& target, Clock::time_point epoch) {
  LiveRecord rec;
  rec.issue = std::chrono::duration<double>(Clock::now() - epoch).count();
  try {
    wire::Resolved r =
        wire::live_resolve_with_failover(target.master, target.slave, target.app_id,
                                         target.resolve_timeout);
    rec.balancer = r.address;
    rec.from_slave = r.from_slave;
    rec.resolve_time = r.elapsed;
    auto res = wire::http_get(net::parse_host_port(r.address), "/", target.http_timeout);
    if (res && res->status == 200) {
      rec.ok = true;
      rec.token = wire::server_token(res->body);
      rec.bytes = res->body.size();
    }
  } catch (const Error&) {
    rec.resolution_failed = rec.balancer.empty();
  }
  rec.done = std::chrono::duration<double>(Clock::now() - epoch).count();
  return rec;
}

struct Gatherer {
  std::mutex mu;
  std::vector<LiveRecord> records;
  std::uint64_t in_flight = 0;
  std::uint64_t max_in_flight = 0;
  std::uint64_t issued = 0;

  void begin() {
    std::lock_guard lock(mu);
    ++issued;
    max_in_flight = std::max(max_in_flight, ++in_flight);
  }
  void end(LiveRecord rec) {
    std::lock_guard lock(mu);
    --in_flight;
    records.push_back(std::move(rec));
  }
};

LiveRun build(const Gatherer& g, const LiveTarget& target, std::string workload, std::string key,
              double cutoff) {
  LiveRun run;
  bench::RunReport& r = run.report;
  r.workload = std::move(workload);
  r.spec_key = std::move(key);
  r.issued = g.issued;
  r.max_in_flight = g.max_in_flight;
  std::vector<LiveRecord> recs = g.records;
  std::sort(recs.begin(), recs.end(),
            [](const LiveRecord& a, const LiveRecord& b) { return a.done < b.done; });
  double last = 0.0;
  std::vector<double> latencies;
  for (const auto& rec : recs) {
    if (cutoff > 0 && rec.done > cutoff) {
      ++r.discarded;
      continue;
    }
    last = std::max(last, rec.done);
    if (!rec.resolution_failed) {
      run.resolution_times.push_back(rec.resolve_time);
      run.slave_resolutions += rec.from_slave ? 1 : 0;
      ++r.selector_hits[rec.from_slave ? target.slave.str() : target.master.str()];
    }
    if (rec.ok) {
      ++r.total_requests;
      latencies.push_back(rec.done - rec.issue);
      const std::string id = rec.token.substr(rec.token.find('-') + 1);
      ++r.backend_hits[id];
      ++r.balancer_hits[rec.balancer];
      r.client_bytes += rec.bytes;
      r.completed_page_bytes += rec.bytes;
      run.tokens.push_back(rec.token);
    } else {
      ++r.failures;
      if (rec.resolution_failed) ++r.resolution_failures;
    }
  }
  r.total_time = last;
  std::sort(latencies.begin(), latencies.end());
  if (!latencies.empty()) {
    double sum = 0.0;
    for (double l : latencies) sum += l;
    r.latency_mean = sum / static_cast<double>(latencies.size());
    auto rank = [&](double q) {
      auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(latencies.size())));
      return latencies[std::clamp<std::size_t>(k, 1, latencies.size()) - 1];
    };
    r.latency_p50 = rank(0.50);
    r.latency_p95 = rank(0.95);
    r.latency_max = latencies.back();
  }
  return run;
}

}  // namespace

LiveRun run_ab(const bench::AbSpec& spec, const LiveTarget& target) {
  bench::validate(spec);
  Gatherer g;
  std::atomic<std::uint64_t> next{0};
  const auto epoch = Clock::now();
  std::vector<std::thread> workers;
  for (std::uint64_t w = 0; w < spec.concurrency; ++w) {
    workers.emplace_back([&] {
      while (next.fetch_add(1) < spec.n_requests) {
        g.begin();
        g.end(one_request(target, epoch));
      }
    });
  }
  for (auto& t : workers) t.join();

  LiveRun run = build(g, target, "ab",
                      "ab n_requests=" + std::to_string(spec.n_requests) +
                          " concurrency=" + std::to_string(spec.concurrency) +
                          " app=" + spec.app_id,
                      0.0);
  auto& r = run.report;
  r.n_requests = spec.n_requests;
  r.concurrency = spec.concurrency;
  if (r.total_requests == 0) {
    throw Error(Errc::SystemUnavailable, "no live request completed for " + spec.app_id);
  }
  r.resp_time = r.total_time / static_cast<double>(r.n_requests);
  r.avg_resp_time = r.resp_time;
  bench::self_check(r);
  return run;
}

LiveRun run_duration(const bench::DurationSpec& spec, const LiveTarget& target) {
  bench::validate(spec);
  Gatherer g;
  const auto epoch = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - epoch).count(); };
  std::vector<std::thread> workers;
  for (std::uint64_t w = 0; w < spec.agents; ++w) {
    const double start_at =
        spec.ramp_up * static_cast<double>(w) / static_cast<double>(spec.agents);
    workers.emplace_back([&, start_at] {
      std::this_thread::sleep_for(std::chrono::duration<double>(start_at));
      while (elapsed() < spec.duration) {
        g.begin();
        g.end(one_request(target, epoch));
        if (spec.think_time > 0) {
          std::this_thread::sleep_for(std::chrono::duration<double>(spec.think_time));
        }
      }
    });
  }
  for (auto& t : workers) t.join();

  std::ostringstream key;
  key.precision(17);
  key << "duration agents=" << spec.agents << " duration=" << spec.duration
      << " ramp_up=" << spec.ramp_up << " think_time=" << spec.think_time << " app=" << spec.app_id;
  LiveRun run = build(g, target, "duration", key.str(), spec.duration);
  auto& r = run.report;
  r.duration = spec.duration;
  r.concurrency = spec.agents;
  if (r.total_requests == 0) {
    throw Error(Errc::SystemUnavailable, "no live request completed for " + spec.app_id);
  }
  r.n_requests = r.total_requests;
  r.resp_time = r.total_time / static_cast<double>(r.n_requests);
  r.avg_resp_time = r.resp_time;
  r.throughput = bench::pages_per_minute(r.total_requests, spec.duration);
  bench::self_check(r);
  return run;
}

}  // namespace gslb::live
