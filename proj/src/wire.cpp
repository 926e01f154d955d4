#include "gslb/wire.hpp"

#include <httplib.h>

#include "gslb/error.hpp"

namespace gslb::wire {

// ------------------------------------------------------------------ resolver

std::string answer_resolve_line(SelectorNode& node, std::string_view line) {
  if (line.empty() || line.back() != '\n') return "ERR MALFORMED\n";
  line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  constexpr std::string_view kVerb = "RESOLVE ";
  if (!line.starts_with(kVerb)) return "ERR MALFORMED\n";
  const std::string_view app = line.substr(kVerb.size());
  if (app.empty() || app.find_first_of(" \t") != std::string_view::npos) return "ERR MALFORMED\n";
  for (unsigned char c : app) {
    if (c < 0x21 || c > 0x7e) return "ERR MALFORMED\n";
  }
  try {
    return "OK " + resolve_app(node, std::string(app)) + "\n";
  } catch (const Error& e) {
    return e.code() == Errc::UnknownApp ? "ERR UNKNOWN_APP\n" : "ERR NO_BALANCER\n";
  }
}

ResolverService::ResolverService(std::shared_ptr<SharedSelectors> selectors,
                                 std::size_t node_index, net::HostPort listen)
    : selectors_(std::move(selectors)), node_index_(node_index), listen_(std::move(listen)) {}

ResolverService::~ResolverService() { stop(); }

void ResolverService::start() {
  if (running_) return;
  listener_ = net::Listener::bind(listen_);
  port_ = listener_.port();
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void ResolverService::accept_loop() {
  while (running_) {
    auto sock = listener_.accept(0.05);
    if (!sock) continue;
    std::lock_guard lock(workers_mu_);
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (*it->done) {
        it->thread.join();
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, done, s = std::move(*sock)]() mutable {
                          serve(std::move(s));
                          *done = true;
                        }),
                        done});
  }
}

void ResolverService::serve(net::Socket sock) {
  auto line = net::read_line(sock, 1.0);
  std::string reply;
  if (!line) {
    reply = "ERR MALFORMED\n";
  } else {
    std::lock_guard lock(selectors_->mu);
    reply = answer_resolve_line(selectors_->group.nodes()[node_index_], *line);
  }
  net::send_all(sock, reply, 1.0);
}

void ResolverService::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  std::list<Worker> workers;
  {
    std::lock_guard lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
}

Resolved live_resolve_with_failover(const net::HostPort& master, const net::HostPort& slave,
                                    const std::string& app_id, double timeout) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string query = "RESOLVE " + app_id + "\n";
  bool from_slave = false;
  for (const net::HostPort* target : {&master, &slave}) {
    if (target->port == 0) continue;
    auto reply = net::exchange_line(*target, query, timeout);
    if (reply && reply->starts_with("OK ")) {
      return {reply->substr(3), from_slave,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    }
    if (reply && *reply == "ERR UNKNOWN_APP") {
      throw Error(Errc::UnknownApp, "resolver " + target->str() + " does not know " + app_id);
    }
    from_slave = true;
  }
  throw Error(Errc::AllSelectorsDown, "no resolver answered for " + app_id);
}

// ------------------------------------------------------------------ backends

StaticSite make_static_site(BackendId id, std::uint64_t page_size) {
  std::string body = "<html><body>SERVER=web-" + std::to_string(id) + "</body></html>\n";
  if (body.size() < page_size) body.append(page_size - body.size(), '.');
  return {id, std::move(body)};
}

std::string server_token(std::string_view body) {
  constexpr std::string_view kKey = "SERVER=web-";
  const auto pos = body.find(kKey);
  if (pos == std::string_view::npos) return {};
  auto end = pos + kKey.size();
  while (end < body.size() && body[end] >= '0' && body[end] <= '9') ++end;
  return std::string(body.substr(pos, end - pos));
}

BackendServer::BackendServer(StaticSite site, net::HostPort listen)
    : site_(std::move(site)), listen_(std::move(listen)) {}

BackendServer::~BackendServer() { stop(); }

void BackendServer::start() {
  if (running_) return;
  server_ = std::make_unique<httplib::Server>();
  const std::string body = site_.body;
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server_->Get(".*", [body](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "text/html");
  });
  if (!server_->bind_to_port(listen_.host, listen_.port)) {
    server_.reset();
    throw Error(Errc::BindFailure, "backend " + std::to_string(site_.id) + " cannot listen on " +
                                       listen_.str() + " (port " + std::to_string(listen_.port) +
                                       ")");
  }
  thread_ = std::thread([srv = server_.get()] { srv->listen_after_bind(); });
  server_->wait_until_ready();
  running_ = true;
}

void BackendServer::stop() {
  if (!running_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
  running_ = false;
}

// ------------------------------------------------------------------ proxy

std::optional<HttpResult> http_get(const net::HostPort& address, const std::string& path,
                                   double timeout) {
  httplib::Client cli(address.host, address.port);
  const auto sec = static_cast<time_t>(timeout);
  const auto usec = static_cast<time_t>((timeout - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec + 4, usec);
  cli.set_write_timeout(sec + 4, usec);
  cli.set_keep_alive(false);
  auto res = cli.Get(path);
  if (!res) return std::nullopt;
  return HttpResult{res->status, res->body};
}

ProxyService::ProxyService(std::shared_ptr<SharedBalancer> balancer, net::HostPort listen,
                           double backend_timeout)
    : balancer_(std::move(balancer)), listen_(std::move(listen)), backend_timeout_(backend_timeout) {}

ProxyService::~ProxyService() { stop(); }

void ProxyService::start() {
  if (running_) return;
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  server_->Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
    Request request;
    request.id = next_request_++;
    request.app_id = balancer_->node.cluster().app_id;
    request.source = req.remote_addr;
    request.bytes = req.method.size() + req.target.size() + 11;
    for (const auto& [k, v] : req.headers) request.bytes += k.size() + v.size() + 4;

    Assignment a;
    {
      std::lock_guard lock(balancer_->mu);
      try {
        a = balancer_->node.dispatch(request, balancer_->now());
      } catch (const Error& e) {
        res.status = 503;
        res.set_content(std::string(errc_name(e.code())) + "\n", "text/plain");
        return;
      }
    }

    std::optional<HttpResult> upstream;
    try {
      upstream = http_get(net::parse_host_port(a.backend_address), req.target, backend_timeout_);
    } catch (const Error&) {
      upstream.reset();
    }

    std::lock_guard lock(balancer_->mu);
    if (!upstream) {
      balancer_->node.complete(a.request_id, 0);
      const ProbeResult failed{a.backend_id, false};
      balancer_->node.probe_tick(std::span(&failed, 1));
      res.status = 502;
      res.set_content("backend unreachable\n", "text/plain");
      return;
    }
    balancer_->node.complete(a.request_id, upstream->body.size());
    res.status = upstream->status;
    res.set_content(std::move(upstream->body), "text/html");
  });
  if (!server_->bind_to_port(listen_.host, listen_.port)) {
    server_.reset();
    throw Error(Errc::BindFailure, "proxy " + balancer_->node.vip() + " cannot listen on " +
                                       listen_.str() + " (port " + std::to_string(listen_.port) +
                                       ")");
  }
  thread_ = std::thread([srv = server_.get()] { srv->listen_after_bind(); });
  server_->wait_until_ready();
  running_ = true;
}

void ProxyService::stop() {
  if (!running_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
  running_ = false;
}

ProbeLoop::ProbeLoop(std::shared_ptr<SharedBalancer> balancer, HealthProbeConfig config,
                     double timeout)
    : balancer_(std::move(balancer)), config_(config), timeout_(timeout) {}

ProbeLoop::~ProbeLoop() { stop(); }

void ProbeLoop::start() {
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { run(); });
}

void ProbeLoop::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void ProbeLoop::run() {
  std::vector<std::pair<BackendId, std::string>> targets;
  {
    std::lock_guard lock(balancer_->mu);
    for (const auto& b : balancer_->node.cluster().backends) targets.emplace_back(b.id, b.address);
  }
  const auto interval = std::chrono::microseconds(static_cast<long long>(config_.interval * 1e6));
  for (;;) {
    {
      std::unique_lock lock(mu_);
      if (cv_.wait_for(lock, interval, [this] { return stopping_; })) return;
    }
    std::vector<ProbeResult> results;
    for (const auto& [id, address] : targets) {
      bool ok = false;
      try {
        auto r = http_get(net::parse_host_port(address), "/health", timeout_);
        ok = r && r->status == 200 && r->body == "ok";
      } catch (const Error&) {
        ok = false;
      }
      results.push_back({id, ok});
    }
    std::lock_guard lock(balancer_->mu);
    balancer_->node.probe_tick(results);
  }
}

}  // namespace gslb::wire
