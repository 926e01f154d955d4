#include "gslb/scenario.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gslb::cli {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<SchemaIssue>& issues) {
  std::string out;
  for (const auto& i : issues) {
    if (!out.empty()) out += "; ";
    out += i.path + ": " + i.message;
  }
  return out;
}

// Walks one JSON object, records problems under a dotted key path and
// rejects keys that are not declared.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<SchemaIssue>& issues,
         std::set<std::string> allowed)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (!node_.is_object()) {
      issue(path_, "expected an object");
      ok_ = false;
      return;
    }
    for (const auto& [key, _] : node_.items()) {
      if (!allowed.contains(key)) issue(at(key), "unknown key");
    }
  }

  bool ok() const noexcept { return ok_; }
  bool has(const std::string& key) const { return ok_ && node_.contains(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& raw(const std::string& key) const { return node_.at(key); }

  void issue(const std::string& path, const std::string& message) {
    issues_.push_back({path, message});
  }

  bool require(const std::string& key) {
    if (!ok_) return false;
    if (node_.contains(key)) return true;
    issue(at(key), "missing required key");
    return false;
  }

  std::string string(const std::string& key, std::string fallback = {}) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) {
      issue(at(key), "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  double number(const std::string& key, double fallback, bool positive, bool allow_zero = true) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) {
      issue(at(key), "expected a number");
      return fallback;
    }
    const double d = v.get<double>();
    if (positive && (d < 0 || (!allow_zero && d == 0))) {
      issue(at(key), allow_zero ? "must be >= 0" : "must be > 0");
      return fallback;
    }
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) {
      issue(at(key), "expected an integer");
      return fallback;
    }
    const auto i = v.get<std::int64_t>();
    if (i < min) {
      issue(at(key), "must be >= " + std::to_string(min));
      return fallback;
    }
    return i;
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<SchemaIssue>& issues_;
  bool ok_ = true;
};

void read_app(const json& node, const std::string& path, AppSpec& app,
              std::vector<SchemaIssue>& issues) {
  Reader r(node, path, issues, {"app_id", "backends", "balancers"});
  if (!r.ok()) return;
  if (r.require("app_id")) app.app_id = r.string("app_id");

  if (r.require("backends")) {
    const json& list = r.raw("backends");
    if (!list.is_array() || list.empty()) {
      r.issue(r.at("backends"), "expected a non-empty list");
    } else {
      std::set<BackendId> seen;
      std::vector<std::pair<Backend, int>> rows;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string bpath = r.at("backends") + "[" + std::to_string(i) + "]";
        Reader b(list[i], bpath, issues,
                 {"id", "capacity_bytes_per_s", "page_size_bytes", "weight", "group", "address"});
        if (!b.ok()) continue;
        Backend be;
        if (b.require("id")) be.id = static_cast<BackendId>(b.integer("id", 0, 0));
        if (b.require("capacity_bytes_per_s")) {
          be.capacity = b.number("capacity_bytes_per_s", 1.0, true, false);
        }
        if (b.require("page_size_bytes")) {
          be.page_size = static_cast<std::uint64_t>(b.integer("page_size_bytes", 1, 1));
        }
        be.weight = static_cast<std::uint32_t>(b.integer("weight", 1, 1));
        be.address = b.string("address");
        const int group = static_cast<int>(b.integer("group", 1, 1));
        if (!seen.insert(be.id).second) b.issue(b.at("id"), "duplicate backend id");
        rows.emplace_back(be, group);
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto& a, const auto& b) { return a.first.id < b.first.id; });
      for (auto& [be, g] : rows) {
        app.backends.push_back(be);
        app.groups.push_back(g);
      }
    }
  }

  if (r.require("balancers")) {
    const json& list = r.raw("balancers");
    if (!list.is_array() || list.empty()) {
      r.issue(r.at("balancers"), "expected a non-empty list");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string lpath = r.at("balancers") + "[" + std::to_string(i) + "]";
        Reader b(list[i], lpath, issues, {"vip", "algorithm", "forward_capacity_rps"});
        if (!b.ok()) continue;
        sim::BalancerSpec spec;
        if (b.require("vip")) spec.vip = b.string("vip");
        if (b.require("algorithm")) {
          const std::string name = b.string("algorithm");
          if (auto kind = parse_scheduler_kind(name)) {
            spec.scheduler = *kind;
          } else {
            b.issue(b.at("algorithm"), "unknown algorithm '" + name + "' (rr, wrr, lc, wlc, sh)");
          }
        }
        if (b.require("forward_capacity_rps")) {
          spec.forward_capacity = b.number("forward_capacity_rps", 1.0, true, false);
        }
        app.balancers.push_back(spec);
      }
    }
  }
}

void read_workload(Reader& top, ScenarioFile& s, std::vector<SchemaIssue>& issues) {
  if (!top.require("workload")) return;
  const json& node = top.raw("workload");
  if (!node.is_object() || !node.contains("kind")) {
    issues.push_back({"workload.kind", "missing required key"});
    return;
  }
  const std::string kind = node.at("kind").is_string() ? node.at("kind").get<std::string>() : "";
  if (kind == "ab") {
    Reader w(node, "workload", issues, {"kind", "n_requests", "concurrency", "repeats"});
    s.workload.kind = WorkloadKind::Ab;
    auto& ab = s.workload.ab;
    ab.n_requests = static_cast<std::uint64_t>(w.integer("n_requests", 200, 1));
    ab.concurrency = static_cast<std::uint64_t>(w.integer("concurrency", 100, 1));
    ab.repeats = static_cast<std::uint64_t>(w.integer("repeats", 30, 1));
    if (ab.n_requests < ab.concurrency) {
      issues.push_back({"workload.n_requests", "must be >= concurrency"});
    }
  } else if (kind == "duration") {
    Reader w(node, "workload", issues,
             {"kind", "agents", "duration_s", "ramp_up_s", "think_time_s"});
    s.workload.kind = WorkloadKind::Duration;
    auto& d = s.workload.duration;
    d.agents = static_cast<std::uint64_t>(w.integer("agents", 100, 1));
    d.duration = w.number("duration_s", 300.0, true, false);
    d.ramp_up = w.number("ramp_up_s", 0.0, true);
    d.think_time = w.number("think_time_s", 0.0, true);
  } else {
    issues.push_back({"workload.kind", "expected 'ab' or 'duration'"});
  }
}

}  // namespace

SchemaErrors::SchemaErrors(std::vector<SchemaIssue> issues)
    : Error(Errc::SchemaError, summarize(issues)), issues_(std::move(issues)) {}

ScenarioFile parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw SchemaErrors({{"", std::string("not a valid document: ") + e.what()}});
  }

  std::vector<SchemaIssue> issues;
  ScenarioFile s;
  Reader top(root, "", issues,
             {"seed", "mode", "apps", "selectors", "latencies", "workload", "ports", "probe",
              "page_jitter", "events"});
  if (!top.ok()) throw SchemaErrors(std::move(issues));

  s.seed = static_cast<std::uint64_t>(top.integer("seed", 1, 0));
  const std::string mode = top.string("mode", "sim");
  if (mode == "sim") {
    s.mode = Mode::Sim;
  } else if (mode == "live") {
    s.mode = Mode::Live;
  } else {
    top.issue("mode", "expected 'sim' or 'live'");
  }

  if (top.require("apps")) {
    const json& apps = top.raw("apps");
    if (!apps.is_array() || apps.empty()) {
      top.issue("apps", "expected a non-empty list");
    } else {
      std::set<std::string> ids;
      for (std::size_t i = 0; i < apps.size(); ++i) {
        AppSpec app;
        const std::string path = "apps[" + std::to_string(i) + "]";
        read_app(apps[i], path, app, issues);
        if (!app.app_id.empty() && !ids.insert(app.app_id).second) {
          issues.push_back({path + ".app_id", "duplicate app id"});
        }
        s.apps.push_back(std::move(app));
      }
    }
  }

  if (top.require("selectors")) {
    Reader sel(top.raw("selectors"), "selectors", issues,
               {"master", "slave", "resolve_cache", "connect_timeout_ms"});
    if (sel.require("master")) s.selectors.master = sel.string("master");
    s.selectors.slave = sel.string("slave");
    const std::string cache = sel.string("resolve_cache", "per_request");
    if (cache == "per_request") {
      s.selectors.resolve_cache = sim::ResolveCache::PerRequest;
    } else if (cache == "per_agent") {
      s.selectors.resolve_cache = sim::ResolveCache::PerAgent;
    } else {
      sel.issue("selectors.resolve_cache", "expected 'per_request' or 'per_agent'");
    }
    s.selectors.connect_timeout = sel.number("connect_timeout_ms", 200.0, true, false) / 1000.0;
    if (!s.selectors.slave.empty() && s.selectors.slave == s.selectors.master) {
      sel.issue("selectors.slave", "must differ from master");
    }
  }

  if (top.has("latencies")) {
    Reader lat(top.raw("latencies"), "latencies", issues,
               {"client_selector_s", "client_balancer_s", "balancer_backend_s"});
    s.latencies.client_selector = lat.number("client_selector_s", 0.0, true);
    s.latencies.client_balancer = lat.number("client_balancer_s", 0.0, true);
    s.latencies.balancer_backend = lat.number("balancer_backend_s", 0.0, true);
  }

  read_workload(top, s, issues);

  if (top.has("ports")) {
    Reader p(top.raw("ports"), "ports", issues, {"control", "backend_base"});
    s.ports.control = static_cast<int>(p.integer("control", 0, 0));
    s.ports.backend_base = static_cast<int>(p.integer("backend_base", 0, 0));
  }

  if (top.has("probe")) {
    Reader p(top.raw("probe"), "probe", issues,
             {"enabled", "interval_s", "fail_threshold", "rise_threshold"});
    if (p.has("enabled")) {
      if (p.raw("enabled").is_boolean()) {
        s.probing = p.raw("enabled").get<bool>();
      } else {
        p.issue("probe.enabled", "expected a boolean");
      }
    }
    s.probe.interval = p.number("interval_s", 1.0, true, false);
    s.probe.fail_threshold = static_cast<unsigned>(p.integer("fail_threshold", 3, 1));
    s.probe.rise_threshold = static_cast<unsigned>(p.integer("rise_threshold", 2, 1));
  }

  s.page_jitter = top.number("page_jitter", 0.0, true);
  if (s.page_jitter >= 1.0) top.issue("page_jitter", "must be < 1");

  if (top.has("events")) {
    const json& list = top.raw("events");
    if (!list.is_array()) {
      top.issue("events", "expected a list");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "events[" + std::to_string(i) + "]";
        Reader e(list[i], path, issues, {"at_s", "component", "action"});
        if (!e.ok()) continue;
        sim::ControlEvent ev;
        if (e.require("at_s")) ev.at = e.number("at_s", 0.0, true);
        if (e.require("component")) ev.component = e.string("component");
        const std::string action = e.require("action") ? e.string("action") : "";
        if (action == "kill") {
          ev.up = false;
        } else if (action == "revive") {
          ev.up = true;
        } else {
          e.issue(path + ".action", "expected 'kill' or 'revive'");
        }
        s.events.push_back(ev);
      }
    }
  }

  if (s.mode == Mode::Live && s.ports.control == 0) {
    issues.push_back({"ports.control", "live mode needs a control port"});
  }

  if (!issues.empty()) throw SchemaErrors(std::move(issues));
  return s;
}

ScenarioFile parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

std::string backend_address(const ScenarioFile& scenario, std::size_t app_index,
                            std::size_t backend_index) {
  const Backend& b = scenario.apps.at(app_index).backends.at(backend_index);
  if (!b.address.empty()) return b.address;
  std::size_t running = 0;
  for (std::size_t a = 0; a < app_index; ++a) running += scenario.apps[a].backends.size();
  return "127.0.0.1:" + std::to_string(scenario.ports.backend_base + running + backend_index);
}

sim::SystemConfig system_for(const ScenarioFile& scenario, const AppSpec& app) {
  sim::SystemConfig cfg;
  cfg.app_id = app.app_id;
  cfg.backends = app.backends;
  cfg.balancers = app.balancers;
  cfg.selector_ids = {scenario.selectors.master};
  if (!scenario.selectors.slave.empty()) cfg.selector_ids.push_back(scenario.selectors.slave);
  cfg.latencies = scenario.latencies;
  cfg.resolve_cache = scenario.selectors.resolve_cache;
  cfg.mode = ForwardingMode::DirectRouting;
  cfg.probe = scenario.probe;
  cfg.probing = scenario.probing;
  cfg.page_jitter = scenario.page_jitter;
  return cfg;
}

std::vector<std::string> bandwidth_groups(const AppSpec& app) {
  std::map<int, std::string> by_group;
  for (std::size_t i = 0; i < app.backends.size(); ++i) {
    std::ostringstream cap;
    cap << app.backends[i].capacity / 1000.0;
    std::string& g = by_group[app.groups[i]];
    g += (g.empty() ? "" : "/") + cap.str();
  }
  std::vector<std::string> out;
  for (auto& [_, g] : by_group) out.push_back(std::move(g));
  return out;
}

std::string algorithm_label(const AppSpec& app) {
  std::string out;
  for (const auto& b : app.balancers) {
    if (!out.empty()) out += " + ";
    out += scheduler_label(b.scheduler);
  }
  return out;
}

std::string scenario_label(const AppSpec& app) {
  return app.balancers.size() == 1 ? "single-level" : "two-level";
}

}  // namespace gslb::cli
