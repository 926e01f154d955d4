#pragma once

#include <cstdint>
#include <optional>

#include "gslb/bench.hpp"
#include "gslb/scenario.hpp"

namespace gslb::cli {

/// Runs the scenario's workload on every app in the simulator, one table row
/// per app. `seed` overrides the scenario seed when set.
bench::ReportDocument run_sim(const ScenarioFile& scenario,
                              std::optional<std::uint64_t> seed = std::nullopt);

/// Whether every row passed its self-checks.
bool all_checks_passed(const bench::ReportDocument& doc);

/// Entry point of the `gslb` binary; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace gslb::cli
