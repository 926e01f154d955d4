#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "gslb/bench.hpp"
#include "gslb/error.hpp"

namespace gslb::bench {

using nlohmann::json;

std::string_view table_name(TableKind kind) noexcept {
  return kind == TableKind::Table3 ? "table3" : "table4";
}

namespace {

int canonical_rank(const TableRow& row) {
  static const std::vector<std::string> single = {"Round Robin", "Weighted Least Connection"};
  static const std::vector<std::string> two = {
      "Weighted Least Connection + Weighted Least Connection",
      "Weighted Least Connection + Round Robin",
      "Round Robin + Round Robin",
  };
  const auto& order = row.scenario == "single-level" ? single : two;
  auto it = std::find(order.begin(), order.end(), row.algorithm);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

int scenario_rank(const TableRow& row) {
  if (row.scenario == "single-level") return 0;
  if (row.scenario == "two-level") return 1;
  return 2;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string group(const TableRow& row, std::size_t i) {
  return i < row.bandwidth_groups.size() ? row.bandwidth_groups[i] : "";
}

// ------------------------------------------------------------ JSON codec

json counters_to_json(const TrafficCounters& c) {
  return {{"requests_in", c.requests_in},
          {"requests_dispatched", c.requests_dispatched},
          {"requests_rejected", c.requests_rejected},
          {"requests_completed", c.requests_completed},
          {"bytes_request_in", c.bytes_request_in},
          {"bytes_request_out", c.bytes_request_out},
          {"bytes_response_out", c.bytes_response_out},
          {"bytes_direct_to_client", c.bytes_direct_to_client}};
}

TrafficCounters counters_from_json(const json& j) {
  TrafficCounters c;
  j.at("requests_in").get_to(c.requests_in);
  j.at("requests_dispatched").get_to(c.requests_dispatched);
  j.at("requests_rejected").get_to(c.requests_rejected);
  j.at("requests_completed").get_to(c.requests_completed);
  j.at("bytes_request_in").get_to(c.bytes_request_in);
  j.at("bytes_request_out").get_to(c.bytes_request_out);
  j.at("bytes_response_out").get_to(c.bytes_response_out);
  j.at("bytes_direct_to_client").get_to(c.bytes_direct_to_client);
  return c;
}

json report_to_json(const RunReport& r) {
  json balancers = json::array();
  for (const auto& b : r.balancers) {
    balancers.push_back({{"vip", b.vip},
                         {"algorithm", b.algorithm},
                         {"counters", counters_to_json(b.counters)},
                         {"consistent", b.consistent}});
  }
  return {{"workload", r.workload},
          {"spec_key", r.spec_key},
          {"n_requests", r.n_requests},
          {"concurrency", r.concurrency},
          {"duration_s", r.duration},
          {"repeats", r.repeats},
          {"total_time_s", r.total_time},
          {"resp_time_s_per_req", r.resp_time},
          {"avg_resp_time_s_per_req", r.avg_resp_time},
          {"latency_mean_s", r.latency_mean},
          {"latency_p50_s", r.latency_p50},
          {"latency_p95_s", r.latency_p95},
          {"latency_max_s", r.latency_max},
          {"issued", r.issued},
          {"total_requests", r.total_requests},
          {"failures", r.failures},
          {"resolution_failures", r.resolution_failures},
          {"discarded", r.discarded},
          {"throughput_pages_per_min", r.throughput},
          {"max_in_flight", r.max_in_flight},
          {"backend_hits", r.backend_hits},
          {"balancer_hits", r.balancer_hits},
          {"selector_hits", r.selector_hits},
          {"client_bytes", r.client_bytes},
          {"completed_page_bytes", r.completed_page_bytes},
          {"balancers", balancers},
          {"check_failures", r.check_failures}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  j.at("workload").get_to(r.workload);
  j.at("spec_key").get_to(r.spec_key);
  j.at("n_requests").get_to(r.n_requests);
  j.at("concurrency").get_to(r.concurrency);
  j.at("duration_s").get_to(r.duration);
  j.at("repeats").get_to(r.repeats);
  j.at("total_time_s").get_to(r.total_time);
  j.at("resp_time_s_per_req").get_to(r.resp_time);
  j.at("avg_resp_time_s_per_req").get_to(r.avg_resp_time);
  j.at("latency_mean_s").get_to(r.latency_mean);
  j.at("latency_p50_s").get_to(r.latency_p50);
  j.at("latency_p95_s").get_to(r.latency_p95);
  j.at("latency_max_s").get_to(r.latency_max);
  j.at("issued").get_to(r.issued);
  j.at("total_requests").get_to(r.total_requests);
  j.at("failures").get_to(r.failures);
  j.at("resolution_failures").get_to(r.resolution_failures);
  j.at("discarded").get_to(r.discarded);
  j.at("throughput_pages_per_min").get_to(r.throughput);
  j.at("max_in_flight").get_to(r.max_in_flight);
  j.at("backend_hits").get_to(r.backend_hits);
  j.at("balancer_hits").get_to(r.balancer_hits);
  j.at("selector_hits").get_to(r.selector_hits);
  j.at("client_bytes").get_to(r.client_bytes);
  j.at("completed_page_bytes").get_to(r.completed_page_bytes);
  for (const auto& b : j.at("balancers")) {
    r.balancers.push_back({b.at("vip").get<std::string>(), b.at("algorithm").get<std::string>(),
                           counters_from_json(b.at("counters")), b.at("consistent").get<bool>()});
  }
  j.at("check_failures").get_to(r.check_failures);
  return r;
}

}  // namespace

ReportDocument render_table(std::vector<TableRow> rows, TableKind table) {
  std::stable_sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    if (scenario_rank(a) != scenario_rank(b)) return scenario_rank(a) < scenario_rank(b);
    return canonical_rank(a) < canonical_rank(b);
  });
  return ReportDocument{table, std::move(rows)};
}

std::string to_text(const ReportDocument& doc) {
  std::ostringstream out;
  char line[512];
  if (doc.table == TableKind::Table3) {
    out << "Response time (closed-loop ab workload)\n";
    std::snprintf(line, sizeof line, "%-13s %-15s %-11s %-54s %14s %14s %14s\n", "Scenario",
                  "Group 1", "Group 2", "Algorithm", "Total time(s)", "Resp(s/req)",
                  "Avg resp(s/req)");
    out << line;
    for (const auto& row : doc.rows) {
      std::snprintf(line, sizeof line, "%-13s %-15s %-11s %-54s %14.6f %14.6f %14.6f\n",
                    row.scenario.c_str(), group(row, 0).c_str(), group(row, 1).c_str(),
                    row.algorithm.c_str(), row.report.total_time, row.report.resp_time,
                    row.report.avg_resp_time);
      out << line;
    }
  } else {
    out << "Finished requests (duration workload)\n";
    std::snprintf(line, sizeof line, "%-13s %-15s %-11s %-54s %14s %16s\n", "Scenario", "Group 1",
                  "Group 2", "Algorithm", "Total Requests", "Throughput");
    out << line;
    for (const auto& row : doc.rows) {
      const std::string tput = std::to_string(row.report.throughput) + " pages/min";
      std::snprintf(line, sizeof line, "%-13s %-15s %-11s %-54s %14llu %16s\n",
                    row.scenario.c_str(), group(row, 0).c_str(), group(row, 1).c_str(),
                    row.algorithm.c_str(),
                    static_cast<unsigned long long>(row.report.total_requests), tput.c_str());
      out << line;
    }
  }
  return out.str();
}

std::string to_csv(const ReportDocument& doc) {
  std::ostringstream out;
  out << "table,scenario,app_id,bandwidth_groups,algorithm,total_time_s,resp_time_s_per_req,"
         "avg_resp_time_s_per_req,total_requests,throughput_pages_per_min,failures\n";
  for (const auto& row : doc.rows) {
    std::string groups;
    for (std::size_t i = 0; i < row.bandwidth_groups.size(); ++i) {
      groups += (i ? ";" : "") + row.bandwidth_groups[i];
    }
    out << table_name(doc.table) << ',' << row.scenario << ',' << row.app_id << ',' << groups
        << ",\"" << row.algorithm << "\"," << fmt("%.9f", row.report.total_time) << ','
        << fmt("%.9f", row.report.resp_time) << ',' << fmt("%.9f", row.report.avg_resp_time)
        << ',' << row.report.total_requests << ',' << row.report.throughput << ','
        << row.report.failures << '\n';
  }
  return out.str();
}

std::string to_json(const ReportDocument& doc) {
  json rows = json::array();
  for (const auto& row : doc.rows) {
    rows.push_back({{"scenario", row.scenario},
                    {"app_id", row.app_id},
                    {"bandwidth_groups", row.bandwidth_groups},
                    {"algorithm", row.algorithm},
                    {"report", report_to_json(row.report)}});
  }
  json j = {{"table", table_name(doc.table)}, {"rows", rows}};
  return j.dump(2) + "\n";
}

ReportDocument parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ReportDocument doc;
    const auto table = j.at("table").get<std::string>();
    if (table == "table3") {
      doc.table = TableKind::Table3;
    } else if (table == "table4") {
      doc.table = TableKind::Table4;
    } else {
      throw Error(Errc::SchemaError, "table: expected table3 or table4, got '" + table + "'");
    }
    for (const auto& row : j.at("rows")) {
      doc.rows.push_back({row.at("scenario").get<std::string>(), row.at("app_id").get<std::string>(),
                          row.at("bandwidth_groups").get<std::vector<std::string>>(),
                          row.at("algorithm").get<std::string>(), report_from_json(row.at("report"))});
    }
    return doc;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("report: ") + e.what());
  }
}

}  // namespace gslb::bench
