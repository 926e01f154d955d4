#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gslb/balancer.hpp"
#include "gslb/simnet.hpp"

namespace gslb::bench {

/// ApacheBench-style closed loop: `concurrency` agents, `n_requests` total.
struct AbSpec {
  std::uint64_t n_requests = 200;
  std::uint64_t concurrency = 100;
  std::uint64_t repeats = 30;
  std::string app_id;

  bool operator==(const AbSpec&) const = default;
};

/// WebBench-style duration loop.
struct DurationSpec {
  std::uint64_t agents = 100;
  double duration = 300.0;
  double ramp_up = 0.0;
  double think_time = 0.0;
  std::string app_id;

  bool operator==(const DurationSpec&) const = default;
};

void validate(const AbSpec& spec);
void validate(const DurationSpec& spec);

struct BalancerSnapshot {
  std::string vip;
  std::string algorithm;
  TrafficCounters counters;
  bool consistent = true;

  bool operator==(const BalancerSnapshot&) const = default;
};

/// Result of one run, or of several repeats folded by aggregate_repeats.
///
/// total_time is last completion minus first issue; resp_time is
/// total_time / n_requests, i.e. ab's "time per request across all
/// concurrent requests", not the mean latency. Counts are summed across
/// repeats, times are averaged.
struct RunReport {
  std::string workload;  // "ab" or "duration"
  std::string spec_key;  // canonical workload description; equal for mergeable runs
  std::uint64_t n_requests = 0;
  std::uint64_t concurrency = 0;
  double duration = 0.0;
  std::uint64_t repeats = 1;

  double total_time = 0.0;
  double resp_time = 0.0;
  double avg_resp_time = 0.0;  // mean of per-run resp_time
  double latency_mean = 0.0;
  double latency_p50 = 0.0;
  double latency_p95 = 0.0;
  double latency_max = 0.0;

  std::uint64_t issued = 0;
  std::uint64_t total_requests = 0;  // completed (before cutoff in duration mode)
  std::uint64_t failures = 0;
  std::uint64_t resolution_failures = 0;
  std::uint64_t discarded = 0;  // in flight at the duration cutoff
  std::uint64_t throughput = 0;  // pages/min, duration mode only
  std::uint64_t max_in_flight = 0;

  std::map<std::string, std::uint64_t> backend_hits;
  std::map<std::string, std::uint64_t> balancer_hits;
  std::map<std::string, std::uint64_t> selector_hits;
  std::uint64_t client_bytes = 0;
  std::uint64_t completed_page_bytes = 0;
  std::vector<BalancerSnapshot> balancers;
  std::vector<std::string> check_failures;

  bool checks_passed() const noexcept { return check_failures.empty(); }
  bool operator==(const RunReport&) const = default;
};

/// floor(total_requests * 60 / duration_seconds) in pages per minute.
std::uint64_t pages_per_minute(std::uint64_t total_requests, double duration_seconds);

/// One ab run on a fresh simulation. Throws SystemUnavailable when nothing completes.
RunReport run_ab_once(const AbSpec& spec, const sim::SystemConfig& system, std::uint64_t seed,
                      std::span<const sim::ControlEvent> faults = {});
/// spec.repeats runs with seeds seed, seed+1, ... folded by aggregate_repeats.
RunReport run_ab(const AbSpec& spec, const sim::SystemConfig& system, std::uint64_t seed,
                 std::span<const sim::ControlEvent> faults = {});
RunReport run_duration(const DurationSpec& spec, const sim::SystemConfig& system,
                       std::uint64_t seed, std::span<const sim::ControlEvent> faults = {});

/// Throws MixedSpecs when the reports came from different workloads.
RunReport aggregate_repeats(std::span<const RunReport> reports);

/// Runs the structural self-checks on a finished report (byte, request and
/// balancer conservation) and records violations in check_failures.
void self_check(RunReport& report);

enum class TableKind { Table3, Table4 };

std::string_view table_name(TableKind kind) noexcept;

struct TableRow {
  std::string scenario;  // "single-level" or "two-level"
  std::string app_id;
  std::vector<std::string> bandwidth_groups;
  std::string algorithm;  // "Round Robin", "Weighted Least Connection + Round Robin", ...
  RunReport report;

  bool operator==(const TableRow&) const = default;
};

struct ReportDocument {
  TableKind table = TableKind::Table3;
  std::vector<TableRow> rows;

  bool operator==(const ReportDocument&) const = default;
};

/// Orders rows single-level first, then two-level, each in the canonical
/// row order (RR, WLC / WLC+WLC, WLC+RR, RR+RR); unknown labels keep their
/// relative input order after the known ones.
ReportDocument render_table(std::vector<TableRow> rows, TableKind table);

std::string to_text(const ReportDocument& doc);
std::string to_csv(const ReportDocument& doc);
std::string to_json(const ReportDocument& doc);
/// Throws SchemaError on malformed input.
ReportDocument parse_report_json(const std::string& text);

}  // namespace gslb::bench
