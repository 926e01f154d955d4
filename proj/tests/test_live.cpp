#include <doctest.h>

#include <set>

#include "gslb/error.hpp"
#include "gslb/live.hpp"

using namespace gslb;

namespace {

// Ports 207xx; two proxies so the selector rotation is visible.
const char* kScenario = R"({
  "mode": "live",
  "apps": [{"app_id": "AP2",
            "backends": [{"id": 1, "capacity_bytes_per_s": 1000, "page_size_bytes": 300},
                         {"id": 2, "capacity_bytes_per_s": 1000, "page_size_bytes": 300},
                         {"id": 3, "capacity_bytes_per_s": 1000, "page_size_bytes": 300}],
            "balancers": [{"vip": "127.0.0.1:20702", "algorithm": "rr", "forward_capacity_rps": 5000},
                          {"vip": "127.0.0.1:20703", "algorithm": "wlc", "forward_capacity_rps": 5000}]}],
  "selectors": {"master": "127.0.0.1:20753", "slave": "127.0.0.1:20754"},
  "workload": {"kind": "ab", "n_requests": 40, "concurrency": 4, "repeats": 1},
  "ports": {"control": 20780, "backend_base": 20711},
  "probe": {"interval_s": 0.1, "fail_threshold": 2, "rise_threshold": 2}
})";

live::LiveTarget target() {
  live::LiveTarget t;
  t.master = {"127.0.0.1", 20753};
  t.slave = {"127.0.0.1", 20754};
  t.app_id = "AP2";
  return t;
}

}  // namespace

TEST_CASE("deployment lists and controls its components") {
  const auto scenario = cli::parse_scenario_text(kScenario);
  live::Deployment d(scenario);
  d.start();
  std::set<std::string> ids;
  for (const auto& c : d.components()) {
    ids.insert(c.id);
    CHECK(c.running);
  }
  CHECK(ids == std::set<std::string>{"selector-master", "selector-slave", "balancer-AP2-1",
                                     "balancer-AP2-2", "backend-AP2-1", "backend-AP2-2",
                                     "backend-AP2-3"});

  live::ControlService control(d, {"127.0.0.1", 20780}, [] {});
  control.start();
  CHECK(control.handle("STATUS").starts_with("OK"));
  CHECK(control.handle("KILL router").starts_with("ERR"));
  CHECK(control.handle("DANCE").starts_with("ERR"));
  auto reply = live::send_control({"127.0.0.1", 20780}, "KILL backend-AP2-3");
  REQUIRE(reply.has_value());
  CHECK(reply->starts_with("OK"));
  for (const auto& c : d.components()) {
    if (c.id == "backend-AP2-3") CHECK_FALSE(c.running);
  }
  CHECK(live::send_control({"127.0.0.1", 20780}, "REVIVE backend-AP2-3")->starts_with("OK"));
  control.stop();
  CHECK_FALSE(live::send_control({"127.0.0.1", 20780}, "STATUS").has_value());
  d.stop();
}

TEST_CASE("live ab run through both levels") {
  const auto scenario = cli::parse_scenario_text(kScenario);
  live::Deployment d(scenario);
  d.start();
  bench::AbSpec spec{40, 4, 1, "AP2"};
  auto run = live::run_ab(spec, target());
  CHECK(run.report.total_requests == 40);
  CHECK(run.report.failures == 0);
  CHECK(run.report.max_in_flight <= 4);
  CHECK(run.report.balancer_hits.size() == 2);
  CHECK(run.tokens.size() == 40);
  CHECK(run.report.checks_passed());
  CHECK(run.report.resp_time == run.report.total_time / 40);

  d.kill("selector-master");
  run = live::run_ab(spec, target());
  CHECK(run.report.resolution_failures == 0);
  CHECK(run.slave_resolutions == 40);
  for (double t : run.resolution_times) CHECK(t < 1.0);

  d.kill("selector-slave");
  CHECK_THROWS_AS(live::run_ab(spec, target()), Error);
  d.stop();
}

TEST_CASE("live duration run") {
  const auto scenario = cli::parse_scenario_text(kScenario);
  live::Deployment d(scenario);
  d.start();
  bench::DurationSpec spec{3, 1.0, 0, 0, "AP2"};
  auto run = live::run_duration(spec, target());
  CHECK(run.report.total_requests > 0);
  CHECK(run.report.issued ==
        run.report.total_requests + run.report.failures + run.report.discarded);
  CHECK(run.report.throughput == bench::pages_per_minute(run.report.total_requests, 1.0));
  CHECK(run.report.checks_passed());
  d.stop();
}

TEST_CASE("deployment start fails cleanly on an occupied port") {
  const auto scenario = cli::parse_scenario_text(kScenario);
  live::Deployment first(scenario);
  first.start();
  live::Deployment second(scenario);
  try {
    second.start();
    FAIL("expected BindFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BindFailure);
  }
  first.stop();
}
