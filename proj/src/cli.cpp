#include "gslb/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gslb/live.hpp"

namespace gslb::cli {

namespace {

bench::TableKind table_for(const ScenarioFile& s) {
  return s.workload.kind == WorkloadKind::Ab ? bench::TableKind::Table3 : bench::TableKind::Table4;
}

bench::TableRow row_for(const AppSpec& app, bench::RunReport report) {
  return {scenario_label(app), app.app_id, bandwidth_groups(app), algorithm_label(app),
          std::move(report)};
}

std::string render(const bench::ReportDocument& doc, const std::string& format) {
  if (format == "text") return bench::to_text(doc);
  if (format == "csv") return bench::to_csv(doc);
  return bench::to_json(doc);
}

int emit(const bench::ReportDocument& doc, const std::string& format, const std::string& out) {
  const std::string body = render(doc, format);
  if (out.empty()) {
    std::cout << body;
  } else {
    std::ofstream file(out, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write " << out << "\n";
      return 1;
    }
    file << body;
    if (format != "text") std::cout << bench::to_text(doc);
  }
  for (const auto& row : doc.rows) {
    for (const auto& f : row.report.check_failures) {
      std::cerr << "self-check failed [" << row.app_id << "]: " << f << "\n";
    }
  }
  return all_checks_passed(doc) ? 0 : 3;
}

int cmd_sim_run(const std::string& path, const std::string& format, const std::string& out,
                std::optional<std::uint64_t> seed) {
  ScenarioFile s = parse_scenario(path);
  if (s.mode != Mode::Sim) {
    std::cerr << "error: " << path << " is not a sim scenario (mode: live)\n";
    return 2;
  }
  return emit(run_sim(s, seed), format, out);
}

std::atomic<bool> g_stop{false};

int cmd_live_up(const std::string& path) {
  ScenarioFile s = parse_scenario(path);
  if (s.mode != Mode::Live) {
    std::cerr << "error: " << path << " is not a live scenario\n";
    return 2;
  }
  live::Deployment deployment(s);
  deployment.start();
  live::ControlService control(deployment, {"127.0.0.1", s.ports.control},
                               [] { g_stop = true; });
  control.start();
  for (const auto& c : deployment.components()) {
    std::cout << c.kind << " " << c.id << " " << c.address << "\n";
  }
  std::cout << "control control 127.0.0.1:" << s.ports.control << "\n" << std::flush;

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  control.stop();
  deployment.stop();
  return 0;
}

int cmd_live_bench(const std::string& path, const std::string& format, const std::string& out) {
  ScenarioFile s = parse_scenario(path);
  if (s.mode != Mode::Live) {
    std::cerr << "error: " << path << " is not a live scenario\n";
    return 2;
  }
  std::vector<bench::TableRow> rows;
  for (const auto& app : s.apps) {
    live::LiveTarget target;
    target.master = net::parse_host_port(s.selectors.master);
    if (!s.selectors.slave.empty()) target.slave = net::parse_host_port(s.selectors.slave);
    target.app_id = app.app_id;
    target.resolve_timeout = s.selectors.connect_timeout;
    live::LiveRun run;
    if (s.workload.kind == WorkloadKind::Ab) {
      bench::AbSpec spec = s.workload.ab;
      spec.app_id = app.app_id;
      // Repeats run back to back against the same services.
      std::vector<bench::RunReport> reports;
      for (std::uint64_t i = 0; i < spec.repeats; ++i) reports.push_back(live::run_ab(spec, target).report);
      run.report = bench::aggregate_repeats(reports);
    } else {
      bench::DurationSpec spec = s.workload.duration;
      spec.app_id = app.app_id;
      run = live::run_duration(spec, target);
    }
    std::cerr << app.app_id << ": " << run.report.total_requests << " completed, "
              << run.report.failures << " failed, " << run.report.resolution_failures
              << " resolution failures\n";
    rows.push_back(row_for(app, std::move(run.report)));
  }
  return emit(bench::render_table(std::move(rows), table_for(s)), format, out);
}

int cmd_live_kill(const std::string& component, const std::string& scenario_path,
                  const std::string& control) {
  net::HostPort target;
  if (!control.empty()) {
    target = net::parse_host_port(control);
  } else {
    target = {"127.0.0.1", parse_scenario(scenario_path).ports.control};
  }
  auto reply = live::send_control(target, "KILL " + component);
  if (!reply) {
    std::cerr << "error: no live deployment answering on " << target.str() << "\n";
    return 1;
  }
  std::cout << *reply << "\n";
  return reply->starts_with("OK") ? 0 : 1;
}

int cmd_report_render(const std::string& path, const std::string& format, const std::string& out) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    return 1;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return emit(bench::parse_report_json(buf.str()), format, out);
}

}  // namespace

bench::ReportDocument run_sim(const ScenarioFile& scenario, std::optional<std::uint64_t> seed) {
  const std::uint64_t base = seed.value_or(scenario.seed);
  std::vector<bench::TableRow> rows;
  for (const auto& app : scenario.apps) {
    const sim::SystemConfig system = system_for(scenario, app);
    bench::RunReport report;
    if (scenario.workload.kind == WorkloadKind::Ab) {
      bench::AbSpec spec = scenario.workload.ab;
      spec.app_id = app.app_id;
      report = bench::run_ab(spec, system, base, scenario.events);
    } else {
      bench::DurationSpec spec = scenario.workload.duration;
      spec.app_id = app.app_id;
      report = bench::run_duration(spec, system, base, scenario.events);
    }
    rows.push_back(row_for(app, std::move(report)));
  }
  return bench::render_table(std::move(rows), table_for(scenario));
}

bool all_checks_passed(const bench::ReportDocument& doc) {
  return std::all_of(doc.rows.begin(), doc.rows.end(),
                     [](const bench::TableRow& r) { return r.report.checks_passed(); });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Two-level global server load-balancing lab"};
  app.require_subcommand(1);

  std::string format = "json";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string scenario_path;
  std::string component;
  std::string control;
  std::string report_path;
  const std::vector<std::string> formats = {"text", "csv", "json"};

  auto* sim = app.add_subcommand("sim", "simulated experiments");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "run a sim scenario and write its report");
  sim_run->add_option("scenario", scenario_path, "scenario file")->required();
  sim_run->add_option("--format", format, "text|csv|json")->check(CLI::IsMember(formats));
  sim_run->add_option("--out", out, "report path (default: stdout)");
  sim_run->add_option("--seed", seed, "override the scenario seed");

  auto* live_cmd = app.add_subcommand("live", "loopback deployment");
  live_cmd->require_subcommand(1);
  auto* live_up = live_cmd->add_subcommand("up", "start resolvers, proxies and backends");
  live_up->add_option("scenario", scenario_path, "scenario file")->required();
  auto* live_bench = live_cmd->add_subcommand("bench", "run the workload against `live up`");
  live_bench->add_option("scenario", scenario_path, "scenario file")->required();
  live_bench->add_option("--format", format, "text|csv|json")->check(CLI::IsMember(formats));
  live_bench->add_option("--out", out, "report path (default: stdout)");
  auto* live_kill = live_cmd->add_subcommand("kill", "stop one running component");
  live_kill->add_option("component", component, "e.g. selector-master, backend-AP1-3")->required();
  live_kill->add_option("--scenario", scenario_path, "scenario file naming the control port");
  live_kill->add_option("--control", control, "control address host:port");

  auto* report = app.add_subcommand("report", "report utilities");
  report->require_subcommand(1);
  auto* render_cmd = report->add_subcommand("render", "re-render a JSON report");
  render_cmd->add_option("report", report_path, "JSON report")->required();
  render_cmd->add_option("--format", format, "text|csv|json")->check(CLI::IsMember(formats));
  render_cmd->add_option("--out", out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim_run->parsed()) return cmd_sim_run(scenario_path, format, out, seed);
    if (live_up->parsed()) return cmd_live_up(scenario_path);
    if (live_bench->parsed()) return cmd_live_bench(scenario_path, format, out);
    if (live_kill->parsed()) {
      if (scenario_path.empty() && control.empty()) {
        std::cerr << "error: live kill needs --scenario or --control\n";
        return 2;
      }
      return cmd_live_kill(component, scenario_path, control);
    }
    if (render_cmd->parsed()) return cmd_report_render(report_path, format, out);
  } catch (const SchemaErrors& e) {
    for (const auto& issue : e.issues()) {
      std::cerr << "schema error: " << issue.path << ": " << issue.message << "\n";
    }
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::BindFailure ? 4 : 1;
  }
  return 2;
}

}  // namespace gslb::cli
