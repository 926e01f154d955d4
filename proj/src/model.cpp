#include "gslb/model.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "gslb/error.hpp"

namespace gslb {

std::string_view health_name(Health h) noexcept { return h == Health::Up ? "up" : "down"; }

void validate(const ClusterSpec& cluster) {
  if (cluster.backends.empty()) {
    throw Error(Errc::SchemaError, "cluster '" + cluster.app_id + "' has no backends");
  }
  for (std::size_t i = 0; i < cluster.backends.size(); ++i) {
    const Backend& b = cluster.backends[i];
    const std::string where = "backend " + std::to_string(b.id);
    if (b.weight < 1) throw Error(Errc::SchemaError, where + ": weight must be >= 1");
    if (!(b.capacity > 0)) throw Error(Errc::SchemaError, where + ": capacity must be > 0");
    if (b.page_size == 0) throw Error(Errc::SchemaError, where + ": page_size must be > 0");
    if (i > 0 && cluster.backends[i - 1].id >= b.id) {
      throw Error(Errc::SchemaError, where + ": ids must be unique and ascending");
    }
  }
}

ClusterSpec make_cluster(std::string app_id, std::vector<Backend> backends) {
  std::stable_sort(backends.begin(), backends.end(),
                   [](const Backend& a, const Backend& b) { return a.id < b.id; });
  ClusterSpec cluster{std::move(app_id), std::move(backends)};
  validate(cluster);
  return cluster;
}

const Backend* find_backend(const ClusterSpec& cluster, BackendId id) noexcept {
  auto it = std::lower_bound(cluster.backends.begin(), cluster.backends.end(), id,
                             [](const Backend& b, BackendId v) { return b.id < v; });
  return it != cluster.backends.end() && it->id == id ? &*it : nullptr;
}

Backend* find_backend(ClusterSpec& cluster, BackendId id) noexcept {
  return const_cast<Backend*>(find_backend(std::as_const(cluster), id));
}

std::string_view scheduler_label(SchedulerKind kind) noexcept {
  switch (kind) {
    case SchedulerKind::RoundRobin: return "Round Robin";
    case SchedulerKind::WeightedRoundRobin: return "Weighted Round Robin";
    case SchedulerKind::LeastConnection: return "Least Connection";
    case SchedulerKind::WeightedLeastConnection: return "Weighted Least Connection";
    case SchedulerKind::SourceHash: return "Source Address Hashing";
  }
  return "?";
}

std::string_view scheduler_short_name(SchedulerKind kind) noexcept {
  switch (kind) {
    case SchedulerKind::RoundRobin: return "rr";
    case SchedulerKind::WeightedRoundRobin: return "wrr";
    case SchedulerKind::LeastConnection: return "lc";
    case SchedulerKind::WeightedLeastConnection: return "wlc";
    case SchedulerKind::SourceHash: return "sh";
  }
  return "?";
}

std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name) noexcept {
  struct Entry {
    std::string_view short_name, long_name;
    SchedulerKind kind;
  };
  static constexpr Entry kTable[] = {
      {"rr", "RoundRobin", SchedulerKind::RoundRobin},
      {"wrr", "WeightedRoundRobin", SchedulerKind::WeightedRoundRobin},
      {"lc", "LeastConnection", SchedulerKind::LeastConnection},
      {"wlc", "WeightedLeastConnection", SchedulerKind::WeightedLeastConnection},
      {"sh", "SourceHash", SchedulerKind::SourceHash},
  };
  for (const auto& e : kTable) {
    if (name == e.short_name || name == e.long_name) return e.kind;
  }
  return std::nullopt;
}

std::vector<Backend> healthy_pool(const ClusterSpec& cluster) {
  std::vector<Backend> pool;
  pool.reserve(cluster.backends.size());
  for (const auto& b : cluster.backends) {
    if (b.health == Health::Up) pool.push_back(b);
  }
  return pool;
}

namespace {

void require_pool(std::span<const Backend> pool) {
  if (pool.empty()) throw Error(Errc::EmptyPool, "no healthy backend to pick from");
}

std::vector<BackendId> ids_of(std::span<const Backend> pool) {
  std::vector<BackendId> ids;
  ids.reserve(pool.size());
  for (const auto& b : pool) ids.push_back(b.id);
  return ids;
}

// Index into `pool` of the next slot in the classic current-weight/gcd scan.
std::size_t wrr_next_index(SchedulerState& state, std::span<const Backend> pool) {
  const auto n = static_cast<std::ptrdiff_t>(pool.size());
  std::int64_t max_weight = 0;
  std::int64_t g = 0;
  for (const auto& b : pool) {
    max_weight = std::max<std::int64_t>(max_weight, b.weight);
    g = std::gcd(g, static_cast<std::int64_t>(b.weight));
  }
  if (state.wrr_index >= n) {
    state.wrr_index = -1;
    state.wrr_current_weight = 0;
  }
  for (;;) {
    state.wrr_index = (state.wrr_index + 1) % n;
    if (state.wrr_index == 0) {
      state.wrr_current_weight -= g;
      if (state.wrr_current_weight <= 0) state.wrr_current_weight = max_weight;
    }
    if (pool[static_cast<std::size_t>(state.wrr_index)].weight >= state.wrr_current_weight) {
      return static_cast<std::size_t>(state.wrr_index);
    }
  }
}

}  // namespace

BackendId pick_round_robin(SchedulerState& state, std::span<const Backend> pool) {
  require_pool(pool);
  state.rr_cursor %= pool.size();
  const BackendId id = pool[state.rr_cursor].id;
  state.rr_cursor = (state.rr_cursor + 1) % pool.size();
  return id;
}

BackendId pick_weighted_round_robin(SchedulerState& state, std::span<const Backend> pool) {
  require_pool(pool);
  return pool[wrr_next_index(state, pool)].id;
}

BackendId pick_least_connection(std::span<const Backend> pool) {
  require_pool(pool);
  const Backend* best = &pool.front();
  for (const auto& b : pool.subspan(1)) {
    if (b.active_conns < best->active_conns ||
        (b.active_conns == best->active_conns && b.id < best->id)) {
      best = &b;
    }
  }
  return best->id;
}

BackendId pick_weighted_least_connection(std::span<const Backend> pool) {
  require_pool(pool);
  const Backend* best = &pool.front();
  for (const auto& b : pool.subspan(1)) {
    // b.conns / b.weight < best.conns / best.weight, without dividing.
    const auto lhs = static_cast<unsigned __int128>(b.active_conns) * best->weight;
    const auto rhs = static_cast<unsigned __int128>(best->active_conns) * b.weight;
    if (lhs < rhs || (lhs == rhs && b.id < best->id)) best = &b;
  }
  return best->id;
}

std::uint32_t fnv1a32(std::string_view data) noexcept {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : data) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

void rebuild_source_hash(SchedulerState& state, std::span<const Backend> pool) {
  require_pool(pool);
  std::uint64_t total_weight = 0;
  for (const auto& b : pool) total_weight += b.weight;

  const std::size_t n = pool.size();
  std::vector<std::uint64_t> floor_quota(n), ceil_quota(n), held(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t share = kSourceHashBuckets * std::uint64_t{pool[i].weight};
    floor_quota[i] = share / total_weight;
    ceil_quota[i] = (share + total_weight - 1) / total_weight;
  }
  auto index_of = [&](BackendId id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < n; ++i) {
      if (pool[i].id == id) return i;
    }
    return std::nullopt;
  };

  const bool built = !state.sh_members.empty();
  std::array<std::optional<std::size_t>, kSourceHashBuckets> owner{};
  std::size_t orphans = 0;
  for (std::size_t bucket = 0; bucket < kSourceHashBuckets; ++bucket) {
    if (built) {
      if (auto i = index_of(state.sh_table[bucket]); i && held[*i] < ceil_quota[*i]) {
        owner[bucket] = *i;
        ++held[*i];
        continue;
      }
    }
    ++orphans;
  }

  // Refill orphans following the weighted round-robin sequence.
  SchedulerState scan;
  auto fill = [&](const std::vector<std::uint64_t>& limit) {
    for (std::size_t bucket = 0; bucket < kSourceHashBuckets && orphans > 0; ++bucket) {
      if (owner[bucket]) continue;
      bool any_room = false;
      for (std::size_t i = 0; i < n; ++i) any_room = any_room || held[i] < limit[i];
      if (!any_room) return;
      for (;;) {
        const std::size_t i = wrr_next_index(scan, pool);
        if (held[i] < limit[i]) {
          owner[bucket] = i;
          ++held[i];
          --orphans;
          break;
        }
      }
    }
  };
  fill(floor_quota);
  fill(ceil_quota);

  for (std::size_t bucket = 0; bucket < kSourceHashBuckets; ++bucket) {
    state.sh_table[bucket] = pool[*owner[bucket]].id;
  }
  state.sh_members = ids_of(pool);
  ++state.table_version;
}

BackendId pick_source_hash(SchedulerState& state, std::string_view source,
                           std::span<const Backend> pool) {
  require_pool(pool);
  if (state.sh_members != ids_of(pool)) rebuild_source_hash(state, pool);
  return state.sh_table[source_bucket(source)];
}

BackendId pick(SchedulerKind kind, SchedulerState& state, std::string_view source,
               std::span<const Backend> pool) {
  switch (kind) {
    case SchedulerKind::RoundRobin: return pick_round_robin(state, pool);
    case SchedulerKind::WeightedRoundRobin: return pick_weighted_round_robin(state, pool);
    case SchedulerKind::LeastConnection: return pick_least_connection(pool);
    case SchedulerKind::WeightedLeastConnection: return pick_weighted_least_connection(pool);
    case SchedulerKind::SourceHash: return pick_source_hash(state, source, pool);
  }
  throw Error(Errc::EmptyPool, "unknown scheduler kind");
}

void on_pool_change(SchedulerState& state, std::span<const Backend> pool) {
  if (pool.empty()) {
    state.rr_cursor = 0;
    if (!state.sh_members.empty()) {
      state.sh_members.clear();
      ++state.table_version;
    }
    return;
  }
  state.rr_cursor %= pool.size();
  if (state.wrr_index >= static_cast<std::ptrdiff_t>(pool.size())) {
    state.wrr_index = -1;
    state.wrr_current_weight = 0;
  }
  if (state.sh_members != ids_of(pool)) rebuild_source_hash(state, pool);
}

void note_connect(Backend& backend) noexcept { ++backend.active_conns; }

void note_close(Backend& backend) {
  if (backend.active_conns == 0) {
    throw Error(Errc::UnderflowClose,
                "close on backend " + std::to_string(backend.id) + " with no open connection");
  }
  --backend.active_conns;
}

}  // namespace gslb
