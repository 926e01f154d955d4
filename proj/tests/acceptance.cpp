// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "gslb/cli.hpp"
#include "gslb/error.hpp"
#include "gslb/live.hpp"
#include "oracles.hpp"

using namespace gslb;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kCli = GSLB_CLI_PATH;
const std::string kScenarios = GSLB_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 6) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("gslb-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>>" + (scratch() / "cli.log").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Shipped sim scenarios, run once and shared by several criteria.
struct ShippedRuns {
  bench::ReportDocument table3;
  bench::ReportDocument table4;
  double table3_seconds = 0;
  double table4_seconds = 0;
};

const ShippedRuns& shipped() {
  static const ShippedRuns runs = [] {
    ShippedRuns r;
    auto t0 = Clock::now();
    r.table3 = cli::run_sim(cli::parse_scenario(kScenarios + "/table3.scenario"));
    r.table3_seconds = seconds_since(t0);
    t0 = Clock::now();
    r.table4 = cli::run_sim(cli::parse_scenario(kScenarios + "/table4.scenario"));
    r.table4_seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

const bench::TableRow* find_row(const bench::ReportDocument& doc, const std::string& algorithm) {
  for (const auto& r : doc.rows) {
    if (r.algorithm == algorithm) return &r;
  }
  return nullptr;
}

const std::string kRR = "Round Robin";
const std::string kWLC = "Weighted Least Connection";
const std::string kWLC_WLC = "Weighted Least Connection + Weighted Least Connection";
const std::string kWLC_RR = "Weighted Least Connection + Round Robin";
const std::string kRR_RR = "Round Robin + Round Robin";

// ------------------------------------------------------------------ criteria

Outcome scheduler_fairness() {
  Outcome o;
  std::vector<Backend> pool(3);
  for (BackendId i = 0; i < 3; ++i) pool[i].id = i + 1;
  SchedulerState rr;
  std::map<BackendId, int> hits;
  for (int i = 0; i < 300; ++i) ++hits[pick_round_robin(rr, pool)];
  o.expect(hits[1] == 100 && hits[2] == 100 && hits[3] == 100,
           "RR counts " + std::to_string(hits[1]) + "/" + std::to_string(hits[2]) + "/" +
               std::to_string(hits[3]));

  std::vector<Backend> wpool(2);
  wpool[0].id = 1;
  wpool[0].weight = 2;
  wpool[1].id = 2;
  wpool[1].weight = 1;
  SchedulerState wrr;
  std::map<BackendId, int> whits;
  for (int i = 0; i < 300; ++i) ++whits[pick_weighted_round_robin(wrr, wpool)];
  o.expect(whits[1] == 200 && whits[2] == 100,
           "WRR counts " + std::to_string(whits[1]) + "/" + std::to_string(whits[2]));
  if (o.pass) o.detail = "RR 100/100/100, WRR 200/100";
  return o;
}

Outcome scheduler_oracles() {
  Outcome o;
  std::mt19937_64 rng(2024);
  int lc_bad = 0, wlc_bad = 0, sh_bad = 0, trials = 0;
  SchedulerState sh_state;
  while (trials < 1000) {
    const std::size_t n = 1 + rng() % 8;
    ClusterSpec cluster;
    cluster.app_id = "AP1";
    for (std::size_t i = 0; i < n; ++i) {
      Backend b;
      b.id = static_cast<BackendId>(i + 1);
      b.weight = 1 + rng() % 10;
      b.active_conns = rng() % 12;
      b.health = rng() % 4 == 0 ? Health::Down : Health::Up;
      cluster.backends.push_back(b);
    }
    const auto pool = healthy_pool(cluster);
    if (pool.empty()) continue;
    ++trials;
    std::vector<oracle::Slot> slots;
    for (const auto& b : pool) slots.push_back({b.id, b.active_conns, b.weight});
    if (pick_least_connection(pool) != oracle::least_connection(slots)) ++lc_bad;
    if (pick_weighted_least_connection(pool) != oracle::weighted_least_connection(slots)) ++wlc_bad;

    const std::string source = "10." + std::to_string(rng() % 256) + "." +
                               std::to_string(rng() % 256) + "." + std::to_string(rng() % 256);
    const BackendId got = pick_source_hash(sh_state, source, pool);
    const BackendId table = sh_state.sh_table[oracle::fnv1a(source) % 256];
    bool healthy = false;
    for (const auto& b : pool) healthy = healthy || b.id == got;
    if (got != table || !healthy) ++sh_bad;
  }
  o.expect(lc_bad == 0, std::to_string(lc_bad) + " LC mismatches");
  o.expect(wlc_bad == 0, std::to_string(wlc_bad) + " WLC mismatches");
  o.expect(sh_bad == 0, std::to_string(sh_bad) + " SH mismatches");
  if (o.pass) o.detail = "1000 states each, LC/WLC/SH all equal to their oracles";
  return o;
}

Outcome processor_sharing_oracle() {
  Outcome o;
  std::mt19937_64 rng(77);
  double worst = 0;
  for (int trace = 0; trace < 200; ++trace) {
    const std::size_t n = 1 + rng() % 5;
    const double capacity = 100.0 + static_cast<double>(rng() % 900);
    std::vector<oracle::FlowSpec> flows;
    for (std::size_t i = 0; i < n; ++i) {
      flows.push_back({static_cast<double>(rng() % 1500) * 1e-3,
                       20.0 + static_cast<double>(rng() % 980)});
    }
    sim::Engine engine;
    engine.set_logging(false);
    sim::ServerLink link(capacity);
    std::vector<double> got(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      engine.schedule(flows[i].arrival, sim::EventKind::Arrival, i, [&, i] {
        link.join(engine, i, flows[i].bytes, [&](sim::FlowId f) { got[f] = engine.now(); });
      });
    }
    engine.run();
    const auto want = oracle::fluid_completions(flows, capacity);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(got[i] - want[i]) / want[i]);
    }
  }
  o.expect(worst <= 1e-6, "worst relative error " + num(worst));
  if (o.pass) o.detail = "200 traces, worst relative error " + num(worst, 3);
  return o;
}

Outcome two_level_alternation() {
  Outcome o;
  // Selector level: AP1 on LB1, AP2 on LB2 and LB3, queries interleaved.
  SelectorGroup g("selector-master", {"selector-slave"});
  g.register_balancer("AP1", "LB1");
  g.register_balancer("AP2", "LB2");
  g.register_balancer("AP2", "LB3");
  std::vector<std::string> ap2;
  for (int i = 0; i < 6; ++i) {
    o.expect(g.resolve("AP1").address == "LB1", "AP1 left LB1");
    ap2.push_back(g.resolve("AP2").address);
  }
  o.expect(ap2 == std::vector<std::string>{"LB2", "LB3", "LB2", "LB3", "LB2", "LB3"},
           "selector AP2 sequence broken");

  // Full simulated path.
  sim::SystemConfig cfg;
  cfg.app_id = "AP2";
  for (BackendId id = 1; id <= 3; ++id) {
    Backend b;
    b.id = id;
    b.capacity = 1e5;
    b.page_size = 1000;
    cfg.backends.push_back(b);
  }
  cfg.balancers = {{"LB2", SchedulerKind::RoundRobin, 1000}, {"LB3", SchedulerKind::RoundRobin, 1000}};
  sim::Simulation sim(cfg, 1);
  std::vector<std::string> via;
  for (int i = 0; i < 8; ++i) {
    sim.issue(0, [&](const sim::RequestRecord& r) { via.push_back(r.balancer_vip); });
    sim.engine().run();
  }
  o.expect(via == std::vector<std::string>{"LB2", "LB3", "LB2", "LB3", "LB2", "LB3", "LB2", "LB3"},
           "simulated AP2 sequence broken");
  if (o.pass) o.detail = "AP2 resolves LB2,LB3,LB2,... in selector and simulator";
  return o;
}

// A `gslb live up` child process.
class LiveUp {
 public:
  explicit LiveUp(const std::string& scenario) {
    pid_ = ::fork();
    if (pid_ == 0) {
      const std::string log = (scratch() / "live-up.log").string();
      if (!std::freopen(log.c_str(), "a", stdout) || !std::freopen(log.c_str(), "a", stderr)) {
        ::_exit(126);
      }
      ::execl(kCli.c_str(), kCli.c_str(), "live", "up", scenario.c_str(), nullptr);
      ::_exit(127);
    }
  }
  bool wait_ready(const net::HostPort& control) {
    const auto end = Clock::now() + std::chrono::seconds(10);
    while (Clock::now() < end) {
      if (live::send_control(control, "STATUS")) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return false;
  }
  int shutdown(const net::HostPort& control) {
    live::send_control(control, "SHUTDOWN");
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    return -1;
  }
  ~LiveUp() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

 private:
  pid_t pid_ = -1;
};

bool g_live_bench_ok = false;

Outcome ha_failover() {
  Outcome o;
  // Simulated: master dies a third of the way into the ab workload.
  auto t3 = cli::parse_scenario(kScenarios + "/table3.scenario");
  const std::vector<sim::ControlEvent> kill{{0.3, "selector-master", false}};
  std::uint64_t sim_fail = 0, slave_hits = 0;
  for (const auto& app : t3.apps) {
    bench::AbSpec spec = t3.workload.ab;
    spec.app_id = app.app_id;
    spec.repeats = 1;
    auto r = bench::run_ab(spec, cli::system_for(t3, app), t3.seed, kill);
    sim_fail += r.resolution_failures;
    if (r.selector_hits.contains("selector-slave")) slave_hits += r.selector_hits.at("selector-slave");
  }
  o.expect(sim_fail == 0, "sim: " + std::to_string(sim_fail) + " failed resolutions");
  o.expect(slave_hits > 0, "sim: slave never answered");

  // Live: `live up`, `live kill selector-master`, then 100 requests.
  const std::string path = kScenarios + "/five-web.scenario";
  const auto scenario = cli::parse_scenario(path);
  const net::HostPort control{"127.0.0.1", scenario.ports.control};
  LiveUp up(path);
  if (!up.wait_ready(control)) {
    o.expect(false, "live up did not come up");
    return o;
  }
  o.expect(run_cli("live kill selector-master --scenario " + path) == 0, "live kill failed");

  live::LiveTarget target;
  target.master = net::parse_host_port(scenario.selectors.master);
  target.slave = net::parse_host_port(scenario.selectors.slave);
  target.app_id = scenario.apps[0].app_id;
  target.resolve_timeout = scenario.selectors.connect_timeout;
  live::LiveRun run;
  try {
    run = live::run_ab(bench::AbSpec{100, 10, 1, target.app_id}, target);
  } catch (const Error& e) {
    o.expect(false, std::string("live run: ") + e.what());
  }
  double slowest = 0;
  for (double t : run.resolution_times) slowest = std::max(slowest, t);
  o.expect(run.report.issued == 100, "live: issued " + std::to_string(run.report.issued));
  o.expect(run.report.resolution_failures == 0,
           "live: " + std::to_string(run.report.resolution_failures) + " resolution failures");
  o.expect(run.slave_resolutions == 100, "live: only " + std::to_string(run.slave_resolutions) +
                                             " answered by the slave");
  o.expect(slowest < 1.0, "live: slowest failover resolution " + num(slowest) + " s");

  // The CLI bench against the same deployment doubles as the live
  // self-check run for criterion 12.
  g_live_bench_ok =
      run_cli("live bench " + path + " --out " + (scratch() / "live.json").string()) == 0;
  o.expect(up.shutdown(control) == 0, "live up did not shut down cleanly");
  if (o.pass) {
    o.detail = "sim 0 failed resolutions (slave answered " + std::to_string(slave_hits) +
               "); live 100/100 via slave, slowest " + num(slowest * 1000, 3) + " ms";
  }
  return o;
}

Outcome direct_routing_accounting() {
  Outcome o;
  int rows = 0;
  for (const auto* doc : {&shipped().table3, &shipped().table4}) {
    for (const auto& row : doc->rows) {
      ++rows;
      const auto& r = row.report;
      for (const auto& b : r.balancers) {
        o.expect(b.counters.bytes_response_out == 0, row.app_id + " " + b.vip + " bytes_response_out " +
                                                         std::to_string(b.counters.bytes_response_out));
      }
      o.expect(r.client_bytes == r.completed_page_bytes,
               row.app_id + " client bytes " + std::to_string(r.client_bytes) + " != " +
                   std::to_string(r.completed_page_bytes));
      o.expect(r.client_bytes > 0, row.app_id + " delivered nothing");
    }
  }
  if (o.pass) o.detail = std::to_string(rows) + " runs: balancer response bytes 0, client bytes = page bytes";
  return o;
}

Outcome report_formulas() {
  Outcome o;
  for (const auto& row : shipped().table3.rows) {
    const auto& r = row.report;
    o.expect(r.resp_time == r.total_time / static_cast<double>(r.n_requests),
             row.app_id + " resp_time != total_time / n");
    o.expect(std::llround(r.resp_time * static_cast<double>(r.n_requests) * 1e9) ==
                 std::llround(r.total_time * 1e9),
             row.app_id + " resp_time * n != total_time");
  }
  for (const auto& row : shipped().table4.rows) {
    const auto& r = row.report;
    const std::uint64_t expect = r.total_requests * 60 / static_cast<std::uint64_t>(r.duration);
    o.expect(r.throughput == expect, row.app_id + " throughput " + std::to_string(r.throughput) +
                                         " != " + std::to_string(expect));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", 90.889 / 200);
  o.expect(std::string(buf) == "0.454", "90.889/200 -> " + std::string(buf));
  o.expect(bench::pages_per_minute(655, 300) == 131, "655 over 300 s != 131");
  o.expect(bench::pages_per_minute(721, 300) == 144, "721 over 300 s != 144");
  if (o.pass) o.detail = "own rows exact; 90.889/200 = 0.454, 655 -> 131, 721 -> 144";
  return o;
}

Outcome table3_directional() {
  Outcome o;
  const auto& doc = shipped().table3;
  const auto* rr = find_row(doc, kRR);
  const auto* wlc = find_row(doc, kWLC);
  const auto* ww = find_row(doc, kWLC_WLC);
  const auto* wr = find_row(doc, kWLC_RR);
  const auto* rrrr = find_row(doc, kRR_RR);
  if (!rr || !wlc || !ww || !wr || !rrrr) {
    o.expect(false, "table3.scenario is missing a row");
    return o;
  }
  const double ratio = ww->report.total_time / wlc->report.total_time;
  o.expect(ratio >= 0.35 && ratio <= 0.80, "WLC+WLC / WLC = " + num(ratio));
  o.expect(rrrr->report.total_time < rr->report.total_time, "RR+RR not faster than RR");
  o.expect(ww->report.total_time < wr->report.total_time &&
               ww->report.total_time < rrrr->report.total_time,
           "WLC+WLC not the fastest two-level row");
  o.expect(shipped().table3_seconds < 10, "took " + num(shipped().table3_seconds) + " s");
  const auto again = cli::run_sim(cli::parse_scenario(kScenarios + "/table3.scenario"));
  o.expect(again == doc, "rerun differs");
  if (o.pass) {
    o.detail = "WLC+WLC/WLC = " + num(ratio, 3) + ", RR+RR " + num(rrrr->report.total_time, 4) +
               " s < RR " + num(rr->report.total_time, 4) + " s, " +
               num(shipped().table3_seconds, 2) + " s";
  }
  return o;
}

Outcome table4_directional() {
  Outcome o;
  std::uint64_t max_single = 0;
  std::uint64_t min_two = std::numeric_limits<std::uint64_t>::max();
  int singles = 0, twos = 0;
  for (const auto& row : shipped().table4.rows) {
    if (row.scenario == "single-level") {
      max_single = std::max(max_single, row.report.total_requests);
      ++singles;
    } else {
      min_two = std::min(min_two, row.report.total_requests);
      ++twos;
    }
  }
  o.expect(singles == 2 && twos == 3, "unexpected row mix");
  o.expect(min_two > max_single,
           "min two-level " + std::to_string(min_two) + " <= max single-level " + std::to_string(max_single));
  o.expect(shipped().table4_seconds < 10, "took " + num(shipped().table4_seconds) + " s");
  const auto again = cli::run_sim(cli::parse_scenario(kScenarios + "/table4.scenario"));
  o.expect(again == shipped().table4, "rerun differs");
  if (o.pass) {
    o.detail = "min two-level " + std::to_string(min_two) + " > max single-level " +
               std::to_string(max_single) + ", " + num(shipped().table4_seconds, 2) + " s";
  }
  return o;
}

Outcome live_balancing() {
  Outcome o;
  const auto scenario = cli::parse_scenario(kScenarios + "/five-web.scenario");
  live::Deployment d(scenario);
  try {
    d.start();
  } catch (const Error& e) {
    o.expect(false, e.what());
    return o;
  }
  const auto proxy = net::parse_host_port(scenario.apps[0].balancers[0].vip);
  std::vector<std::string> tokens;
  std::set<std::string> bodies;
  for (int i = 0; i < 10; ++i) {
    auto r = wire::http_get(proxy, "/", 2.0);
    tokens.push_back(r ? wire::server_token(r->body) : "<failed>");
    if (r && i < 5) bodies.insert(r->body);
  }
  std::vector<std::string> expect;
  for (int round = 0; round < 2; ++round) {
    for (int id = 1; id <= 5; ++id) expect.push_back("SERVER=web-" + std::to_string(id));
  }
  o.expect(tokens == expect, "sequential tokens out of cycle");
  o.expect(bodies.size() == 5, "bodies are not unique");

  std::string a, b;
  std::thread ta([&] { a = wire::server_token(wire::http_get(proxy, "/", 2.0).value_or(wire::HttpResult{}).body); });
  std::thread tb([&] { b = wire::server_token(wire::http_get(proxy, "/", 2.0).value_or(wire::HttpResult{}).body); });
  ta.join();
  tb.join();
  o.expect(!a.empty() && !b.empty() && a != b, "concurrent clients saw '" + a + "' and '" + b + "'");
  d.stop();
  if (o.pass) o.detail = "web-1..5 twice in order; concurrent clients got " + a + " and " + b;
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const std::string name : {"table3", "table4"}) {
    const auto a = scratch() / (name + "-a.json");
    const auto b = scratch() / (name + "-b.json");
    const std::string scenario = kScenarios + "/" + name + ".scenario";
    o.expect(run_cli("sim run " + scenario + " --format json --out " + a.string()) == 0,
             name + " first run failed");
    o.expect(run_cli("sim run " + scenario + " --format json --out " + b.string()) == 0,
             name + " second run failed");
    const auto ja = slurp(a);
    o.expect(!ja.empty() && ja == slurp(b), name + " reports differ");
  }
  if (o.pass) o.detail = "table3 and table4 JSON byte-identical across runs";
  return o;
}

Outcome conservation() {
  Outcome o;
  for (const auto* doc : {&shipped().table3, &shipped().table4}) {
    for (const auto& row : doc->rows) {
      const auto& r = row.report;
      for (const auto& f : r.check_failures) o.expect(false, row.app_id + ": " + f);
      for (const auto& b : r.balancers) o.expect(b.consistent, row.app_id + " " + b.vip + " inconsistent");
      o.expect(r.issued == r.total_requests + r.failures + r.discarded,
               row.app_id + " issued != completed + failed + discarded");
    }
  }
  o.expect(run_cli("sim run " + kScenarios + "/table3.scenario --out " +
                   (scratch() / "c3.json").string()) == 0,
           "table3 exit code nonzero");
  o.expect(run_cli("sim run " + kScenarios + "/table4.scenario --out " +
                   (scratch() / "c4.json").string()) == 0,
           "table4 exit code nonzero");
  o.expect(g_live_bench_ok, "five-web live bench exit code nonzero");
  // A broken report must surface as a nonzero exit.
  auto broken = bench::parse_report_json(slurp(scratch() / "c4.json"));
  broken.rows[0].report.check_failures.push_back("issued != completed + failed + discarded");
  std::ofstream(scratch() / "broken.json") << bench::to_json(broken);
  o.expect(run_cli("report render " + (scratch() / "broken.json").string()) != 0,
           "violation did not give a nonzero exit");
  if (o.pass) o.detail = "all shipped scenarios pass self-checks; a violation exits nonzero";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "scheduler fairness", scheduler_fairness},
      {2, "scheduler oracle equivalence", scheduler_oracles},
      {3, "processor-sharing oracle", processor_sharing_oracle},
      {4, "two-level workflow alternation", two_level_alternation},
      {5, "selector master failover", ha_failover},
      {6, "direct-routing accounting", direct_routing_accounting},
      {7, "report formulas", report_formulas},
      {8, "table3 directional ordering", table3_directional},
      {9, "table4 directional ordering", table4_directional},
      {10, "live balancing over five sites", live_balancing},
      {11, "determinism", determinism},
      {12, "conservation self-checks", conservation},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %-34s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  std::error_code ec;
  fs::remove_all(scratch(), ec);
  return failed == 0 ? 0 : 1;
}
