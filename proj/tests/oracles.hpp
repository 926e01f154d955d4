#pragma once

// Reference implementations used only by tests. They are written from the
// rule statements, not from the library code, and favour obviousness over
// speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

struct Slot {
  std::uint32_t id;
  std::uint64_t conns;
  std::uint32_t weight;
};

// Lowest conns, then lowest id.
inline std::uint32_t least_connection(const std::vector<Slot>& pool) {
  std::uint32_t best = 0;
  std::uint64_t best_conns = std::numeric_limits<std::uint64_t>::max();
  for (const auto& s : pool) {
    if (s.conns < best_conns || (s.conns == best_conns && s.id < best)) {
      best = s.id;
      best_conns = s.conns;
    }
  }
  return best;
}

// Lowest conns/weight in long double; near-ties are settled with exact
// rationals so the float path never decides an equality.
inline std::uint32_t weighted_least_connection(const std::vector<Slot>& pool) {
  long double best_ratio = std::numeric_limits<long double>::infinity();
  for (const auto& s : pool) {
    best_ratio = std::min(best_ratio, static_cast<long double>(s.conns) / s.weight);
  }
  std::vector<Slot> near;
  for (const auto& s : pool) {
    const long double r = static_cast<long double>(s.conns) / s.weight;
    if (r - best_ratio <= 1e-12L * std::max<long double>(1, best_ratio)) near.push_back(s);
  }
  // Exact minimum among the candidates: a/b < c/d  <=>  a*d < c*b.
  const Slot* best = &near.front();
  for (const auto& s : near) {
    const unsigned __int128 lhs = static_cast<unsigned __int128>(s.conns) * best->weight;
    const unsigned __int128 rhs = static_cast<unsigned __int128>(best->conns) * s.weight;
    if (lhs < rhs || (lhs == rhs && s.id < best->id)) best = &s;
  }
  return best->id;
}

// Literal transcription of the weighted round-robin scan:
//   i = (i + 1) mod n; if i == 0 { cw -= gcd; if cw <= 0 { cw = max } }
//   if w[i] >= cw return i
class WrrEnumerator {
 public:
  explicit WrrEnumerator(std::vector<std::uint32_t> weights) : w_(std::move(weights)) {
    for (auto x : w_) {
      g_ = std::gcd(g_, static_cast<long>(x));
      max_ = std::max(max_, static_cast<long>(x));
    }
  }
  std::size_t next() {
    const long n = static_cast<long>(w_.size());
    for (;;) {
      i_ = (i_ + 1) % n;
      if (i_ == 0) {
        cw_ -= g_;
        if (cw_ <= 0) cw_ = max_;
      }
      if (static_cast<long>(w_[static_cast<std::size_t>(i_)]) >= cw_) {
        return static_cast<std::size_t>(i_);
      }
    }
  }

 private:
  std::vector<std::uint32_t> w_;
  long i_ = -1;
  long cw_ = 0;
  long g_ = 0;
  long max_ = 0;
};

inline std::uint32_t fnv1a(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

struct FlowSpec {
  double arrival;  // seconds, multiple of the step
  double bytes;
};

// Fixed-step fluid integrator for one processor-sharing link. Time advances
// in steps of `dt`; inside a step, flows that finish early are retired at
// the interpolated instant and their share is handed to the survivors.
inline std::vector<double> fluid_completions(const std::vector<FlowSpec>& flows, double capacity,
                                             double dt = 1e-3) {
  const std::size_t n = flows.size();
  std::vector<double> remaining(n);
  std::vector<double> done(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = flows[i].bytes;

  std::size_t finished = 0;
  for (long step = 0; finished < n; ++step) {
    const double t0 = static_cast<double>(step) * dt;
    double t = t0;
    double left = dt;
    for (;;) {
      std::vector<std::size_t> active;
      for (std::size_t i = 0; i < n; ++i) {
        // Arrivals sit on the step grid, so "arrived by t0" is exact.
        if (done[i] < 0 && flows[i].arrival <= t0 + dt * 1e-6) active.push_back(i);
      }
      if (active.empty() || left <= 0) break;
      const double rate = capacity / static_cast<double>(active.size());
      double first = std::numeric_limits<double>::infinity();
      for (auto i : active) first = std::min(first, remaining[i] / rate);
      const double span = std::min(first, left);
      for (auto i : active) remaining[i] -= rate * span;
      t += span;
      left -= span;
      for (auto i : active) {
        if (remaining[i] <= 1e-9 * flows[i].bytes) {
          remaining[i] = 0;
          done[i] = t;
          ++finished;
        }
      }
    }
  }
  return done;
}

}  // namespace oracle
