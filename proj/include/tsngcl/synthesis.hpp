#pragma once

// Window synthesis: one <offset, length, period> per (switch port, ST queue),
// chosen from divisor-restricted integer domains to minimise the average
// window utilisation while every flow meets its deadline under a pluggable
// delay analyzer.
//
// Candidates are screened by the structural constraints and by the
// capacity/demand pruning rule; only clean candidates reach the analyzer.
// Small lattices are enumerated outright, larger ones explored by tabu search.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsngcl/analysis.hpp"
#include "tsngcl/model.hpp"
#include "tsngcl/proxy.hpp"
#include "tsngcl/schedule.hpp"

namespace tsngcl {

// ---------------------------------------------------------------------------
// Domains

struct QueueDomain {
  QueueKey key;
  QueueFlows flows;
  std::int64_t hyperperiod_mt = 0;
  std::vector<std::int64_t> periods;  // ascending divisors of hyperperiod_mt
  std::int64_t guard_band_mt = 0;
  std::int64_t min_length = 0;

  std::int64_t max_offset() const { return hyperperiod_mt; }
  std::int64_t max_length() const { return hyperperiod_mt; }

  /// Number of (T, w, phi) triples with w >= min_length and phi + w <= T.
  double lattice_size() const {
    double n = 0.0;
    for (std::int64_t t : periods)
      if (t >= min_length) {
        const double k = static_cast<double>(t - min_length + 1);
        n += k * (k + 1.0) / 2.0;
      }
    return n;
  }
};

struct Domains {
  std::vector<QueueDomain> queues;  // ordered by (port, queue)
  std::map<LinkIndex, std::vector<std::size_t>> by_port;

  double lattice_size() const {
    double n = 1.0;
    for (const auto& q : queues) n *= q.lattice_size();
    return n;
  }
};

inline Domains build_domains(const Instance& inst) {
  Domains d;
  for (const auto& [key, flows] : queue_flow_sets(inst).queues) {
    const Link& link = inst.links.at(key.link);
    const std::int64_t k = hyperperiod_of_port(inst, key.link).count();
    const std::int64_t mt = link.macrotick.count();
    if (k % mt != 0)
      throw Error(ErrorCode::EmptyDomain, "hyperperiod of " + inst.link_name(key.link) + " is not a whole number of macroticks");
    QueueDomain q;
    q.key = key;
    q.flows = flows;
    q.hyperperiod_mt = k / mt;
    q.guard_band_mt = guard_band_macroticks(inst, flows.all, link);
    q.min_length = to_macroticks_ceil(transmission_time(max_frame_size(inst, flows.all), link), link) + q.guard_band_mt;
    if (q.min_length > q.hyperperiod_mt)
      throw Error(ErrorCode::EmptyDomain, "minimum window on " + inst.link_name(key.link) + " queue " +
                                              std::to_string(key.queue) + " exceeds the hyperperiod");
    q.periods = divisors(q.hyperperiod_mt);
    d.by_port[key.link].push_back(d.queues.size());
    d.queues.push_back(std::move(q));
  }
  return d;
}

/// Neighbouring periods of `t` on the divisor lattice (previous, next); absent ends are nullopt.
inline std::pair<std::optional<std::int64_t>, std::optional<std::int64_t>> adjacent_periods(const QueueDomain& d,
                                                                                            std::int64_t t) {
  auto it = std::lower_bound(d.periods.begin(), d.periods.end(), t);
  std::optional<std::int64_t> lo, hi;
  if (it != d.periods.begin()) lo = *std::prev(it);
  auto up = (it != d.periods.end() && *it == t) ? std::next(it) : it;
  if (up != d.periods.end()) hi = *up;
  return {lo, hi};
}

using Assignment = std::vector<WindowConfig>;

inline Schedule to_schedule(const Domains& d, const Assignment& a, std::string method = "cpwo") {
  Schedule s;
  s.method = std::move(method);
  for (std::size_t i = 0; i < d.queues.size(); ++i) s.windows[d.queues[i].key] = {a.at(i)};
  return s;
}

/// Start point: T = hyperperiod, w = minimum, offsets packed per port in queue order.
inline Assignment initial_assignment(const Domains& d) {
  Assignment a(d.queues.size());
  for (const auto& [_, idx] : d.by_port) {
    std::int64_t next = 0;
    for (std::size_t i : idx) {
      const auto& q = d.queues[i];
      a[i] = WindowConfig{next, q.min_length, q.hyperperiod_mt};
      next += q.min_length;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Constraints

enum class ViolationKind { DomainBounds, WindowBounds, PeriodNotDivisor, NonHarmonic, Overlap, Bandwidth, Timing };

constexpr std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DomainBounds: return "DomainBounds";
    case ViolationKind::WindowBounds: return "WindowBounds";
    case ViolationKind::PeriodNotDivisor: return "PeriodNotDivisor";
    case ViolationKind::NonHarmonic: return "NonHarmonic";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::Bandwidth: return "Bandwidth";
    case ViolationKind::Timing: return "Timing";
  }
  return "Unknown";
}

struct Violation {
  ViolationKind kind;
  std::size_t queue = 0;
  std::size_t other = 0;   // second queue for pairwise rules
  double magnitude = 0.0;  // relative size, used to rank candidates
};

/// Precomputed per-queue demand for the pruning rule at a given backlog.
inline std::vector<Area> queue_demands(const Instance& inst, const Domains& d, int backlog) {
  std::vector<Area> out;
  for (const auto& q : d.queues) {
    auto [all, sw] = demand_inputs(inst, q.flows);
    out.push_back(transmission_demand(all, sw, backlog, microseconds{q.hyperperiod_mt * inst.links[q.key.link].macrotick.count()}).total);
  }
  return out;
}

inline std::vector<Violation> check_constraints(const Instance& inst, const Domains& d, const Assignment& a,
                                                const std::vector<Area>& demands) {
  std::vector<Violation> v;
  std::vector<bool> sound(d.queues.size(), true);
  for (std::size_t i = 0; i < d.queues.size(); ++i) {
    const auto& q = d.queues[i];
    const auto& w = a[i];
    if (w.offset < 0 || w.offset > q.max_offset() || w.length < q.min_length || w.length > q.max_length() ||
        w.period <= 0 || w.period > q.hyperperiod_mt) {
      v.push_back({ViolationKind::DomainBounds, i, i, 1.0});
      sound[i] = false;
      continue;
    }
    if (w.offset + w.length > w.period) {
      v.push_back({ViolationKind::WindowBounds, i, i,
                   static_cast<double>(w.offset + w.length - w.period) / static_cast<double>(w.period)});
      sound[i] = false;
    }
    if (q.hyperperiod_mt % w.period != 0) {
      v.push_back({ViolationKind::PeriodNotDivisor, i, i, 1.0});
      sound[i] = false;
    }
  }
  for (const auto& [_, idx] : d.by_port)
    for (std::size_t x = 0; x < idx.size(); ++x)
      for (std::size_t y = x + 1; y < idx.size(); ++y) {
        const auto& wa = a[idx[x]];
        const auto& wb = a[idx[y]];
        if (wa.period <= 0 || wb.period <= 0) continue;
        if (wa.period % wb.period != 0 && wb.period % wa.period != 0)
          v.push_back({ViolationKind::NonHarmonic, idx[x], idx[y], 1.0});
        if (windows_overlap(wa, wb)) {
          const std::int64_t g = std::gcd(wa.period, wb.period);
          const std::int64_t r = (((wb.offset - wa.offset) % g) + g) % g;
          const std::int64_t amount = std::max(wa.length - r, wb.length - (g - r));
          v.push_back({ViolationKind::Overlap, idx[x], idx[y],
                       static_cast<double>(std::max<std::int64_t>(amount, 1)) / static_cast<double>(g)});
        }
      }
  for (std::size_t i = 0; i < d.queues.size(); ++i) {
    if (!sound[i]) continue;
    const auto& q = d.queues[i];
    const auto& w = a[i];
    const Link& link = inst.links[q.key.link];
    const std::int64_t mt = link.macrotick.count();
    // Window share w/T against the summed transmission share of the queue's flows (exact).
    const std::int64_t k_us = q.hyperperiod_mt * mt;
    __int128 load = 0;
    for (FlowIndex f : q.flows.all)
      load += static_cast<__int128>(transmission_time(inst.wire_bytes(inst.flows[f]), link).count()) *
              (k_us / inst.flows[f].period.count());
    const __int128 supply = static_cast<__int128>(w.length) * mt * 1000 * (k_us / (w.period * mt));
    if (supply < load)
      v.push_back({ViolationKind::Bandwidth, i, i, static_cast<double>(load - supply) / static_cast<double>(load)});
    const auto cap = window_capacity(w, link, q.guard_band_mt, microseconds{k_us});
    if (cap.total < demands[i]) {
      const double dem = demands[i].byte_micros();
      v.push_back({ViolationKind::Timing, i, i, (dem - cap.total.byte_micros()) / std::max(dem, 1.0)});
    }
  }
  return v;
}

inline std::vector<Violation> check_constraints(const Instance& inst, const Domains& d, const Assignment& a,
                                                const AnalysisParams& params) {
  return check_constraints(inst, d, a, queue_demands(inst, d, params.backlog));
}

// ---------------------------------------------------------------------------
// Objective

/// Exact value of the summed window utilisation, kept as a fraction so equal
/// objectives compare equal.
struct OmegaValue {
  __int128 num = 0;
  __int128 den = 1;
  double value = 0.0;

  friend bool operator<(const OmegaValue& a, const OmegaValue& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator==(const OmegaValue& a, const OmegaValue& b) { return a.num * b.den == b.num * a.den; }
};

inline OmegaValue omega_of(const Assignment& a) {
  if (a.empty()) throw Error(ErrorCode::NoWindows, "assignment has no windows");
  OmegaValue o;
  std::int64_t l = 1;
  bool exact = true;
  for (const auto& w : a) {
    try {
      l = checked_lcm(l, w.period);
      if (l > (std::int64_t{1} << 40)) exact = false;
    } catch (const Error&) {
      exact = false;
    }
    if (!exact) break;
  }
  double sum = 0.0;
  for (const auto& w : a) sum += static_cast<double>(w.length) / static_cast<double>(w.period);
  o.value = sum / static_cast<double>(a.size());
  if (exact) {
    for (const auto& w : a) o.num += static_cast<__int128>(w.length) * (l / w.period);
    o.den = static_cast<__int128>(l) * static_cast<__int128>(a.size());
  } else {
    o.num = static_cast<__int128>(std::llround(o.value * 1e12));
    o.den = static_cast<__int128>(1'000'000'000'000LL);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Search

struct SearchParams {
  double time_budget_s = 60.0;  // safety cap; iteration limits make runs reproducible
  std::size_t max_iterations = 3000;
  std::size_t stagnation_limit = 400;
  int backlog = 1;
  std::size_t tabu_tenure = 10;
  std::size_t neighborhood_size = 48;
  std::uint64_t seed = 1;
  double exhaustive_threshold = 2e5;
};

struct SearchStats {
  std::size_t iterations = 0;
  std::size_t candidates = 0;
  std::size_t structurally_rejected = 0;
  std::size_t timing_pruned = 0;
  std::size_t analyzer_calls = 0;
  std::size_t analyzer_accepted = 0;
  std::size_t cache_hits = 0;
  double elapsed_s = 0.0;
  bool exhaustive = false;
  std::string stop_reason;
};

struct Solution {
  Assignment assignment;
  Schedule schedule;
  double omega = 0.0;
  DelayReport report;
  std::size_t found_at = 0;  // candidate counter when first seen
};

struct SynthesisResult {
  Domains domains;
  std::vector<Solution> incumbents;  // strictly decreasing objective
  SearchStats stats;
  Assignment best_candidate;         // best-scored candidate, feasible or not
  std::vector<Violation> best_violations;
  std::optional<DelayReport> best_report;

  const Solution& best() const { return incumbents.back(); }
};

struct Move {
  std::vector<std::pair<std::size_t, WindowConfig>> changes;
  int var = 0;  // 0 offset, 1 length, 2 period
};

namespace detail {

// Lexicographic candidate rank: tier 0 feasible, 1 analysed but late, 2 constraint-violating.
struct Score {
  int tier = 3;
  std::array<double, 3> key{};

  friend bool operator<(const Score& a, const Score& b) {
    if (a.tier != b.tier) return a.tier < b.tier;
    return a.key < b.key;
  }
  friend bool operator==(const Score&, const Score&) = default;
};

struct CachedEval {
  Score score;
  bool analysed = false;
  std::vector<std::size_t> focus;  // queues worth moving
};

inline WindowConfig rescale(const WindowConfig& w, std::int64_t t, const QueueDomain& q) {
  WindowConfig out;
  out.period = t;
  out.length = std::clamp<std::int64_t>((w.length * t + w.period / 2) / w.period, q.min_length, std::max(t, q.min_length));
  out.offset = std::clamp<std::int64_t>((w.offset * t + w.period / 2) / w.period, 0, std::max<std::int64_t>(t - out.length, 0));
  return out;
}

/// Smallest window length meeting the bandwidth share, at least the domain minimum.
inline std::int64_t fitted_length(const Instance& inst, const QueueDomain& q, std::int64_t t) {
  const Link& link = inst.links[q.key.link];
  // Usable part (w - GB) carries at least the queue's transmission share.
  double share = 0.0;
  for (FlowIndex f : q.flows.all)
    share += static_cast<double>(transmission_time(inst.wire_bytes(inst.flows[f]), link).count()) /
             (1000.0 * static_cast<double>(inst.flows[f].period.count()));
  const auto need = static_cast<std::int64_t>(std::ceil(share * static_cast<double>(t) - 1e-9)) + q.guard_band_mt;
  return std::max(q.min_length, need);
}

}  // namespace detail

/// Constructive starting points: one period shared by every queue (a common
/// divisor of all port hyperperiods), lengths sized to each queue's bandwidth
/// share times `slack`, windows packed back to back on each port. A slack of 0
/// instead shares the whole period among the port's queues in proportion to
/// their fitted lengths. At most `max_periods` periods are tried, spread over
/// the candidate list.
inline std::vector<Assignment> harmonic_starts(const Instance& inst, const Domains& d, std::size_t max_periods = 24,
                                               std::initializer_list<double> slacks = {1.0, 2.0, 0.0}) {
  std::vector<Assignment> out;
  if (d.queues.empty()) return out;
  std::int64_t g = 0;     // gcd of hyperperiods, microseconds
  std::int64_t unit = 1;  // lcm of macroticks
  for (const auto& q : d.queues) {
    const std::int64_t mt = inst.links[q.key.link].macrotick.count();
    g = std::gcd(g, q.hyperperiod_mt * mt);
    unit = std::lcm(unit, mt);
  }
  std::vector<std::int64_t> periods;
  for (std::int64_t t : divisors(g))
    if (t % unit == 0) periods.push_back(t);
  std::reverse(periods.begin(), periods.end());
  if (periods.size() > max_periods) {
    std::vector<std::int64_t> picked;
    for (std::size_t k = 0; k < max_periods; ++k) picked.push_back(periods[k * (periods.size() - 1) / (max_periods - 1)]);
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    periods = std::move(picked);
  }
  for (std::int64_t t_us : periods)
    for (double slack : slacks) {
      Assignment a(d.queues.size());
      bool fits = true;
      for (const auto& [port, idx] : d.by_port) {
        const std::int64_t t = t_us / inst.links[port].macrotick.count();
        std::vector<std::int64_t> len;
        std::int64_t fitted_sum = 0;
        for (std::size_t i : idx) {
          const auto& q = d.queues[i];
          const std::int64_t fit = detail::fitted_length(inst, q, t);
          fitted_sum += fit;
          len.push_back(slack > 0.0 ? std::max(q.min_length, static_cast<std::int64_t>(std::ceil(
                                                                   static_cast<double>(fit - q.guard_band_mt) * slack)) +
                                                                   q.guard_band_mt)
                                    : fit);
        }
        if (slack == 0.0 && fitted_sum <= t) {
          std::int64_t spare = t - fitted_sum;
          for (std::size_t k = 0; k < len.size(); ++k) {
            const std::int64_t extra = spare * len[k] / std::max<std::int64_t>(fitted_sum, 1);
            len[k] += extra;
          }
          (void)spare;
        }
        std::int64_t next = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          a[idx[k]] = WindowConfig{next, len[k], t};
          next += len[k];
        }
        if (next > t) fits = false;
      }
      if (fits) out.push_back(std::move(a));
    }
  return out;
}

inline bool move_valid(const Domains& d, const Move& m) {
  for (const auto& [i, w] : m.changes) {
    const auto& q = d.queues[i];
    if (w.offset < 0 || w.length < q.min_length || w.period <= 0 || w.offset + w.length > w.period) return false;
    if (q.hyperperiod_mt % w.period != 0) return false;
  }
  return !m.changes.empty();
}

/// Candidate moves around `a`. Queues in `focus` (all queues when empty) get
/// offset, length and period moves; port-wide and network-wide period steps are
/// always included. Moves breaking a window's own bounds are dropped. When more
/// than `limit` moves remain, a seeded sample is returned.
inline std::vector<Move> neighborhood(const Instance& inst, const Domains& d, const Assignment& a,
                                      std::mt19937_64& rng, const std::vector<std::size_t>& focus,
                                      std::size_t limit) {
  std::vector<Move> out;
  auto single = [&](std::size_t i, WindowConfig w, int var) {
    if (w == a[i]) return;
    Move m{{{i, w}}, var};
    if (move_valid(d, m)) out.push_back(std::move(m));
  };
  std::vector<std::size_t> queues = focus;
  if (queues.empty())
    for (std::size_t i = 0; i < d.queues.size(); ++i) queues.push_back(i);

  for (std::size_t i : queues) {
    const auto& q = d.queues[i];
    const auto& w = a[i];
    const std::int64_t k_off = std::max<std::int64_t>(2, w.period / 8);
    for (std::int64_t off : {w.offset - 1, w.offset + 1, w.offset - k_off, w.offset + k_off, std::int64_t{0}})
      single(i, {off, w.length, w.period}, 0);
    // Pack right after another window of the same port.
    for (std::size_t j : d.by_port.at(q.key.link))
      if (j != i) single(i, {(a[j].offset + a[j].length) % w.period, w.length, w.period}, 0);

    const std::int64_t k_len = std::max<std::int64_t>(2, w.length / 4);
    const std::int64_t fit = detail::fitted_length(inst, q, w.period);
    for (std::int64_t len : {w.length - 1, w.length + 1, w.length - k_len, w.length + k_len, fit, q.min_length})
      single(i, {std::min(w.offset, std::max<std::int64_t>(w.period - len, 0)), len, w.period}, 1);

    // Resize and repack every window of the port back to back, same order, when
    // the port shares one period.
    const auto& port = d.by_port.at(q.key.link);
    if (port.size() > 1 &&
        std::all_of(port.begin(), port.end(), [&](std::size_t j) { return a[j].period == w.period; }))
      for (std::int64_t len : {w.length + k_len, w.length - k_len, 2 * w.length}) {
        std::vector<std::size_t> order(port);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x].offset < a[y].offset; });
        Move m{{}, 1};
        std::int64_t next = 0;
        for (std::size_t j : order) {
          const std::int64_t l = j == i ? len : a[j].length;
          m.changes.push_back({j, {next, l, w.period}});
          next += l;
        }
        if (next > w.period) {
          // Take the excess from the other windows, down to their minimum.
          std::int64_t excess = next - w.period;
          for (auto& [j, cw] : m.changes)
            if (j != i) {
              const std::int64_t cut = std::min(excess, cw.length - d.queues[j].min_length);
              cw.length -= cut;
              excess -= cut;
            }
          next = 0;
          for (auto& [j, cw] : m.changes) {
            cw.offset = next;
            next += cw.length;
          }
        }
        if (move_valid(d, m)) out.push_back(std::move(m));
      }

    auto [lo, hi] = adjacent_periods(q, w.period);
    if (lo) single(i, detail::rescale(w, *lo, q), 2);
    if (hi) {
      single(i, detail::rescale(w, *hi, q), 2);
      single(i, {w.offset, w.length, *hi}, 2);
    }
  }

  // Port-wide and network-wide period steps keep harmonic relations intact.
  auto stepped = [&](const std::vector<std::size_t>& idx, bool down, bool keep_length) {
    Move m{{}, 2};
    for (std::size_t i : idx) {
      auto [lo, hi] = adjacent_periods(d.queues[i], a[i].period);
      auto t = down ? lo : hi;
      if (!t) return;
      WindowConfig w = detail::rescale(a[i], *t, d.queues[i]);
      if (keep_length) w = {a[i].offset, a[i].length, *t};
      m.changes.push_back({i, w});
    }
    if (move_valid(d, m)) out.push_back(std::move(m));
  };
  for (const auto& [_, idx] : d.by_port)
    if (idx.size() > 1) {
      stepped(idx, true, false);
      stepped(idx, false, false);
    }
  std::vector<std::size_t> every(d.queues.size());
  std::iota(every.begin(), every.end(), std::size_t{0});
  stepped(every, true, false);
  stepped(every, false, false);
  stepped(every, false, true);

  if (out.size() > limit) {
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(limit);
  }
  return out;
}

class WindowSearch {
 public:
  WindowSearch(const Instance& inst, const DelayAnalyzer& analyzer, const AnalysisParams& aparams, SearchParams sp)
      : inst_(inst), analyzer_(analyzer), aparams_(aparams), sp_(sp) {
    aparams_.backlog = sp_.backlog;
  }

  SynthesisResult run() {
    start_ = std::chrono::steady_clock::now();
    result_ = SynthesisResult{};
    result_.domains = build_domains(inst_);
    demands_ = queue_demands(inst_, result_.domains, sp_.backlog);
    const auto& d = result_.domains;
    if (d.queues.empty()) throw Error(ErrorCode::NoWindows, "no switch port carries a flow");

    if (sp_.time_budget_s <= 0.0) {
      evaluate(initial_assignment(d));
      result_.stats.stop_reason = "budget";
    } else if (d.lattice_size() <= sp_.exhaustive_threshold) {
      result_.stats.exhaustive = true;
      enumerate();
    } else {
      tabu();
    }
    result_.stats.elapsed_s = elapsed();
    return std::move(result_);
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  bool out_of_time() const { return elapsed() > sp_.time_budget_s; }

  detail::CachedEval evaluate(const Assignment& a) {
    if (auto it = cache_.find(a); it != cache_.end()) {
      ++result_.stats.cache_hits;
      return it->second;
    }
    ++result_.stats.candidates;
    const auto& d = result_.domains;
    detail::CachedEval ev;
    auto violations = check_constraints(inst_, d, a, demands_);
    std::optional<DelayReport> report;
    if (!violations.empty()) {
      const bool only_timing = std::all_of(violations.begin(), violations.end(),
                                           [](const Violation& v) { return v.kind == ViolationKind::Timing; });
      ++(only_timing ? result_.stats.timing_pruned : result_.stats.structurally_rejected);
      double mag = 0.0;
      for (const auto& v : violations) {
        mag += v.magnitude;
        ev.focus.push_back(v.queue);
        if (v.other != v.queue) ev.focus.push_back(v.other);
      }
      ev.score = {2, {static_cast<double>(violations.size()), mag, 0.0}};
    } else {
      ++result_.stats.analyzer_calls;
      report = analyzer_.analyze(inst_, to_schedule(d, a), aparams_);
      ev.analysed = true;
      if (report->all_schedulable()) {
        ++result_.stats.analyzer_accepted;
        ev.score = {0, {omega_of(a).value, report->mean_wcd(), 0.0}};
        record_feasible(a, *report);
      } else {
        double unstable = 0.0, late = 0.0, tardiness = 0.0;
        std::map<QueueKey, std::size_t> index;
        for (std::size_t i = 0; i < d.queues.size(); ++i) index[d.queues[i].key] = i;
        for (const auto& fd : report->flows) {
          if (fd.schedulable) continue;
          const Flow& fl = inst_.flows[fd.flow];
          if (fd.unstable) unstable += 1.0;
          else {
            late += 1.0;
            tardiness += (fd.wcd_us - static_cast<double>(fl.deadline.count())) / static_cast<double>(fl.deadline.count());
          }
          for (std::size_t h = 1; h < fl.route.size(); ++h) ev.focus.push_back(index.at(QueueKey{fl.route[h], fl.priority}));
        }
        ev.score = {1, {unstable, late, tardiness}};
      }
    }
    std::sort(ev.focus.begin(), ev.focus.end());
    ev.focus.erase(std::unique(ev.focus.begin(), ev.focus.end()), ev.focus.end());

    if (!best_score_ || ev.score < *best_score_ || (ev.score == *best_score_ && a < result_.best_candidate)) {
      best_score_ = ev.score;
      result_.best_candidate = a;
      result_.best_violations = std::move(violations);
      result_.best_report = std::move(report);
    }
    if (cache_.size() > 100000) cache_.clear();
    cache_.emplace(a, ev);
    return ev;
  }

  void record_feasible(const Assignment& a, const DelayReport& report) {
    const OmegaValue om = omega_of(a);
    auto& inc = result_.incumbents;
    const bool improves = inc.empty() || om < inc_omega_;
    const bool ties_better = !inc.empty() && om == inc_omega_ && report.mean_wcd() < inc.back().report.mean_wcd() - 1e-9;
    if (!improves && !ties_better) return;
    Solution s{a, to_schedule(result_.domains, a), om.value, report, result_.stats.candidates};
    if (improves) inc.push_back(std::move(s));
    else inc.back() = std::move(s);
    inc_omega_ = om;
  }

  void enumerate() {
    const auto& d = result_.domains;
    const std::size_t n = d.queues.size();
    // Per-queue option lists in (T, w, phi) order.
    std::vector<std::vector<WindowConfig>> options(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::int64_t t : d.queues[i].periods)
        for (std::int64_t w = d.queues[i].min_length; w <= t; ++w)
          for (std::int64_t phi = 0; phi + w <= t; ++phi) options[i].push_back({phi, w, t});
    for (const auto& o : options)
      if (o.empty()) {
        result_.stats.stop_reason = "empty";
        return;
      }
    std::vector<std::size_t> pos(n, 0);
    Assignment a(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) a[i] = options[i][pos[i]];
      evaluate(a);
      ++result_.stats.iterations;
      if ((result_.stats.iterations & 1023) == 0 && out_of_time()) {
        result_.stats.stop_reason = "budget";
        return;
      }
      std::size_t i = 0;
      while (i < n && ++pos[i] == options[i].size()) pos[i++] = 0;
      if (i == n) break;
    }
    result_.stats.stop_reason = "exhausted";
  }

  void tabu() {
    const auto& d = result_.domains;
    std::mt19937_64 rng(sp_.seed);
    Assignment current = initial_assignment(d);
    auto cur_eval = evaluate(current);
    for (auto& a : harmonic_starts(inst_, d)) {
      const auto ev = evaluate(a);
      if (ev.score < cur_eval.score) {
        current = std::move(a);
        cur_eval = ev;
      }
    }
    Assignment best = current;
    detail::Score best_score = cur_eval.score;
    std::map<std::tuple<std::size_t, int, std::int64_t>, std::size_t> tabu_until;
    std::size_t stagnation = 0;

    auto value_of = [](const WindowConfig& w, int var) { return var == 0 ? w.offset : var == 1 ? w.length : w.period; };

    for (std::size_t iter = 0;; ++iter) {
      if (iter >= sp_.max_iterations) {
        result_.stats.stop_reason = "iterations";
        break;
      }
      if (stagnation >= sp_.stagnation_limit) {
        result_.stats.stop_reason = "stagnation";
        break;
      }
      if (out_of_time()) {
        result_.stats.stop_reason = "budget";
        break;
      }
      ++result_.stats.iterations;
      const auto moves = neighborhood(inst_, d, current, rng, cur_eval.score.tier == 0 ? std::vector<std::size_t>{} : cur_eval.focus,
                                      sp_.neighborhood_size);
      std::optional<std::pair<detail::Score, Assignment>> chosen;
      const Move* chosen_move = nullptr;
      for (const auto& m : moves) {
        Assignment cand = current;
        bool is_tabu = false;
        for (const auto& [i, w] : m.changes) {
          cand[i] = w;
          auto it = tabu_until.find({i, m.var, value_of(w, m.var)});
          if (it != tabu_until.end() && it->second > iter) is_tabu = true;
        }
        const auto ev = evaluate(cand);
        if (is_tabu && !(ev.score < best_score)) continue;
        if (!chosen || ev.score < chosen->first || (ev.score == chosen->first && cand < chosen->second)) {
          chosen = {ev.score, std::move(cand)};
          chosen_move = &m;
        }
        if (out_of_time()) break;
      }
      if (!chosen) {
        result_.stats.stop_reason = "no-moves";
        break;
      }
      for (const auto& [i, w] : chosen_move->changes)
        tabu_until[{i, chosen_move->var, value_of(current[i], chosen_move->var)}] = iter + sp_.tabu_tenure;
      current = std::move(chosen->second);
      cur_eval = evaluate(current);
      if (cur_eval.score < best_score) {
        best_score = cur_eval.score;
        best = current;
        stagnation = 0;
      } else if (++stagnation % std::max<std::size_t>(sp_.stagnation_limit / 4, 1) == 0) {
        // Intensify around the best point found so far.
        current = best;
        cur_eval = evaluate(current);
      }
    }
  }

  const Instance& inst_;
  const DelayAnalyzer& analyzer_;
  AnalysisParams aparams_;
  SearchParams sp_;
  std::chrono::steady_clock::time_point start_;
  SynthesisResult result_;
  std::vector<Area> demands_;
  std::map<Assignment, detail::CachedEval> cache_;
  std::optional<detail::Score> best_score_;
  OmegaValue inc_omega_;
};

/// Runs the search and returns every incumbent; an empty incumbent list means
/// nothing feasible was found (see `best_violations` / `best_report`).
inline SynthesisResult synthesize(const Instance& inst, const SearchParams& sp, const DelayAnalyzer& analyzer,
                                  const AnalysisParams& aparams = {}) {
  return WindowSearch(inst, analyzer, aparams, sp).run();
}

/// As `synthesize` but throws NoFeasibleSolutionFound when the search ends empty-handed.
inline SynthesisResult optimize(const Instance& inst, const SearchParams& sp, const DelayAnalyzer& analyzer,
                                const AnalysisParams& aparams = {}) {
  auto r = synthesize(inst, sp, analyzer, aparams);
  if (r.incumbents.empty())
    throw Error(ErrorCode::NoFeasibleSolutionFound,
                "search stopped (" + r.stats.stop_reason + ") after " + std::to_string(r.stats.candidates) +
                    " candidates without a schedulable assignment");
  return r;
}

}  // namespace tsngcl
