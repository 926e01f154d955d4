#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gslb {

using BackendId = std::uint32_t;

enum class Health { Up, Down };

std::string_view health_name(Health h) noexcept;

/// A web server behind a level-2 balancer.
///
/// `capacity` is the response-serving bandwidth in bytes per second and
/// `page_size` the size of the body it returns. `active_conns` is owned by
/// whichever balancer holds this copy of the backend.
struct Backend {
  BackendId id = 0;
  std::string address;
  std::uint32_t weight = 1;
  double capacity = 1.0;
  std::uint64_t page_size = 1;
  Health health = Health::Up;
  std::uint64_t active_conns = 0;

  bool operator==(const Backend&) const = default;
};

/// One application's server farm; backends are kept sorted by id.
struct ClusterSpec {
  std::string app_id;
  std::vector<Backend> backends;

  bool operator==(const ClusterSpec&) const = default;
};

/// Throws Error(SchemaError) when the cluster breaks a Backend/ClusterSpec
/// invariant (empty, duplicate or unsorted ids, zero weight/capacity/page).
void validate(const ClusterSpec& cluster);

/// Sorts backends by id and validates.
ClusterSpec make_cluster(std::string app_id, std::vector<Backend> backends);

const Backend* find_backend(const ClusterSpec& cluster, BackendId id) noexcept;
Backend* find_backend(ClusterSpec& cluster, BackendId id) noexcept;

enum class SchedulerKind {
  RoundRobin,
  WeightedRoundRobin,
  LeastConnection,
  WeightedLeastConnection,
  SourceHash,
};

/// Human label as printed in result tables, e.g. "Weighted Least Connection".
std::string_view scheduler_label(SchedulerKind kind) noexcept;
/// Short scenario-file name: rr, wrr, lc, wlc, sh.
std::string_view scheduler_short_name(SchedulerKind kind) noexcept;
/// Accepts the short names and the enumerator spellings ("RoundRobin", ...).
std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name) noexcept;

inline constexpr std::size_t kSourceHashBuckets = 256;

/// Mutable per-balancer scheduling state shared by all five algorithms.
struct SchedulerState {
  std::size_t rr_cursor = 0;
  // -1 means "before the first slot", as in the classic LVS scan.
  std::ptrdiff_t wrr_index = -1;
  std::int64_t wrr_current_weight = 0;

  std::array<BackendId, kSourceHashBuckets> sh_table{};
  std::uint64_t table_version = 0;
  // Healthy ids (ascending) the current table was built for; empty = unbuilt.
  std::vector<BackendId> sh_members;

  bool operator==(const SchedulerState&) const = default;
};

std::vector<Backend> healthy_pool(const ClusterSpec& cluster);

BackendId pick_round_robin(SchedulerState& state, std::span<const Backend> pool);
BackendId pick_weighted_round_robin(SchedulerState& state, std::span<const Backend> pool);
BackendId pick_least_connection(std::span<const Backend> pool);
BackendId pick_weighted_least_connection(std::span<const Backend> pool);
BackendId pick_source_hash(SchedulerState& state, std::string_view source,
                           std::span<const Backend> pool);

/// Dispatches to the algorithm named by `kind`; `source` is only read by SourceHash.
BackendId pick(SchedulerKind kind, SchedulerState& state, std::string_view source,
               std::span<const Backend> pool);

/// 32-bit FNV-1a (offset basis 2166136261, prime 16777619) over the raw bytes.
std::uint32_t fnv1a32(std::string_view data) noexcept;

inline std::size_t source_bucket(std::string_view source) noexcept {
  return fnv1a32(source) % kSourceHashBuckets;
}

/// Rebuilds the source-hash table for `pool` (must be non-empty).
///
/// Buckets whose owner is still healthy are kept as long as the owner stays
/// within ceil(256 * weight / total_weight); orphaned buckets are refilled in
/// weighted round-robin order, first up to each backend's floor quota and
/// then up to its ceiling. Removing a backend therefore only moves the
/// buckets it owned. Increments table_version.
void rebuild_source_hash(SchedulerState& state, std::span<const Backend> pool);

/// Reconciles state with a new healthy pool: the RR cursor is reduced modulo
/// the new size, an out-of-range WRR scan restarts, and the source-hash
/// table is rebuilt if the healthy id set changed.
void on_pool_change(SchedulerState& state, std::span<const Backend> pool);

void note_connect(Backend& backend) noexcept;
/// Throws Error(UnderflowClose) when no connection is open.
void note_close(Backend& backend);

}  // namespace gslb
