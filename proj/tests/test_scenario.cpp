#include <doctest.h>

#include <algorithm>

#include "gslb/scenario.hpp"

using namespace gslb;
using namespace gslb::cli;

namespace {

const char* kMinimal = R"({
  // comments are allowed
  "apps": [{"app_id": "AP1",
            "backends": [{"id": 1, "capacity_bytes_per_s": 1000, "page_size_bytes": 100}],
            "balancers": [{"vip": "LB1", "algorithm": "rr", "forward_capacity_rps": 10}]}],
  "selectors": {"master": "m", "slave": "s"},
  "workload": {"kind": "ab", "n_requests": 4, "concurrency": 2, "repeats": 1}
})";

std::vector<std::string> issue_paths(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const SchemaErrors& e) {
    std::vector<std::string> out;
    for (const auto& i : e.issues()) out.push_back(i.path);
    return out;
  }
  return {};
}

bool mentions(const std::vector<std::string>& paths, const std::string& p) {
  return std::find(paths.begin(), paths.end(), p) != paths.end();
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
  auto s = parse_scenario_text(kMinimal);
  CHECK(s.mode == Mode::Sim);
  CHECK(s.seed == 1);
  REQUIRE(s.apps.size() == 1);
  CHECK(s.apps[0].backends[0].weight == 1);
  CHECK(s.workload.kind == WorkloadKind::Ab);
  CHECK(s.workload.ab.n_requests == 4);
  CHECK(s.selectors.resolve_cache == sim::ResolveCache::PerRequest);
  CHECK(scenario_label(s.apps[0]) == "single-level");
  CHECK(algorithm_label(s.apps[0]) == "Round Robin");
  CHECK(bandwidth_groups(s.apps[0]) == std::vector<std::string>{"1"});
}

TEST_CASE("missing apps is named") {
  const std::string text = R"({"selectors": {"master": "m"}, "workload": {"kind": "ab"}})";
  CHECK(mentions(issue_paths(text), "apps"));
}

TEST_CASE("negative capacity names the backend key") {
  auto text = replace(kMinimal, "\"capacity_bytes_per_s\": 1000", "\"capacity_bytes_per_s\": -5");
  CHECK(mentions(issue_paths(text), "apps[0].backends[0].capacity_bytes_per_s"));
}

TEST_CASE("unknown keys are rejected") {
  auto text = replace(kMinimal, "\"page_size_bytes\": 100", "\"page_size_bytes\": 100, \"colour\": 1");
  CHECK(mentions(issue_paths(text), "apps[0].backends[0].colour"));
  text = replace(kMinimal, "\"selectors\"", "\"extra\": 1, \"selectors\"");
  CHECK(mentions(issue_paths(text), "extra"));
}

TEST_CASE("every problem is reported at once") {
  auto text = replace(kMinimal, "\"algorithm\": \"rr\"", "\"algorithm\": \"fastest\"");
  text = replace(text, "\"page_size_bytes\": 100", "\"page_size_bytes\": 0");
  const auto paths = issue_paths(text);
  CHECK(mentions(paths, "apps[0].balancers[0].algorithm"));
  CHECK(mentions(paths, "apps[0].backends[0].page_size_bytes"));
}

TEST_CASE("workload and mode validation") {
  CHECK(mentions(issue_paths(replace(kMinimal, "\"kind\": \"ab\"", "\"kind\": \"soak\"")), "workload.kind"));
  CHECK(mentions(issue_paths(replace(kMinimal, "\"concurrency\": 2", "\"concurrency\": 9")),
                 "workload.n_requests"));
  auto live = replace(kMinimal, "\"apps\"", "\"mode\": \"live\", \"apps\"");
  CHECK(mentions(issue_paths(live), "ports.control"));
  CHECK(mentions(issue_paths("[1, 2"), ""));
}

TEST_CASE("events and probe block") {
  auto text = replace(kMinimal, "\"selectors\"",
                      R"("events": [{"at_s": 1.5, "component": "selector-master", "action": "kill"}],
                         "probe": {"enabled": true, "interval_s": 0.5}, "selectors")");
  auto s = parse_scenario_text(text);
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0].at == 1.5);
  CHECK_FALSE(s.events[0].up);
  CHECK(s.probing);
  CHECK(s.probe.interval == 0.5);
  CHECK(s.probe.fail_threshold == 3);
  auto bad = replace(text, "\"kill\"", "\"nuke\"");
  CHECK(mentions(issue_paths(bad), "events[0].action"));
}

TEST_CASE("shipped scenarios parse") {
  const std::string dir = GSLB_SCENARIO_DIR;
  auto t3 = parse_scenario(dir + "/table3.scenario");
  CHECK(t3.apps.size() == 5);
  for (const auto& app : t3.apps) {
    std::vector<double> caps;
    for (const auto& b : app.backends) caps.push_back(b.capacity);
    CHECK(caps == std::vector<double>{1e5, 1e5, 1e6, 1e6, 1e6});
    CHECK(bandwidth_groups(app) == std::vector<std::string>{"100/100/1000", "1000/1000"});
  }
  CHECK(t3.workload.ab.n_requests == 200);
  CHECK(t3.workload.ab.concurrency == 100);
  CHECK(t3.workload.ab.repeats == 30);
  auto t4 = parse_scenario(dir + "/table4.scenario");
  CHECK(t4.workload.kind == WorkloadKind::Duration);
  CHECK(t4.workload.duration.agents == 100);
  auto live = parse_scenario(dir + "/five-web.scenario");
  CHECK(live.mode == Mode::Live);
  CHECK(live.apps[0].backends.size() == 5);
  CHECK(backend_address(live, 0, 2) == "127.0.0.1:18103");
}

TEST_CASE("unreadable file") {
  CHECK_THROWS_AS(parse_scenario("/nonexistent/x.scenario"), Error);
}
