#pragma once

// Discrete-event model of a store-and-forward network of 802.1Qbv switches.
// End systems release frames strictly periodically from a per-flow phase and
// send them under strict priority without gates. Switch egress ports hold
// eight FIFO queues behind timed gates; a frame starts only when its gate is
// open and it can finish before the gate closes. Time is integer nanoseconds.

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "tsngcl/model.hpp"
#include "tsngcl/schedule.hpp"

namespace tsngcl {

inline constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

enum class GateState { Open, Closed };

inline GateState gate_state(const WindowConfig& w, std::int64_t t) {
  return gate_open(w, t) ? GateState::Open : GateState::Closed;
}

/// Look-ahead check for a single window: the gate is open at `t_ns` and the
/// frame can finish before this opening closes. The window is in macroticks.
inline bool transmission_eligible(std::int64_t frame_bytes, const WindowConfig& w, std::int64_t t_ns, const Link& link) {
  const std::int64_t unit = link.macrotick.count() * 1000;
  const std::int64_t period = w.period * unit;
  const std::int64_t r = ((t_ns % period) + period) % period;
  const std::int64_t open = w.offset * unit;
  const std::int64_t close = open + w.length * unit;
  if (r < open || r >= close) return false;
  if (w.length == w.period) return true;
  return r + transmission_time(frame_bytes, link).count() <= close;
}

struct QueueView {
  bool backlogged = false;
  bool open = false;
  bool eligible = false;
};

/// Highest-index queue whose gate is open and whose head frame may start.
inline std::optional<int> strict_priority_select(std::span<const QueueView> queues) {
  for (int q = static_cast<int>(queues.size()) - 1; q >= 0; --q) {
    const auto& v = queues[static_cast<std::size_t>(q)];
    if (v.backlogged && v.open && v.eligible) return q;
  }
  return std::nullopt;
}

/// Gate program of one egress port in nanoseconds.
class PortGates {
 public:
  PortGates() = default;

  PortGates(const std::map<int, std::vector<WindowConfig>>& windows, const Link& link) {
    const std::int64_t unit = link.macrotick.count() * 1000;
    for (const auto& [q, ws] : windows) {
      std::int64_t cycle = 1;
      for (const auto& w : ws) {
        if (w.length == 0) continue;
        queues_[q].push_back({w.offset * unit, w.length * unit, w.period * unit});
        cycle = checked_lcm(cycle, w.period * unit);
      }
      if (!queues_[q].empty()) {
        st_[q] = true;
        any_st_ = true;
        cycle_[q] = cycle;
      }
    }
  }

  bool has_windows(int q) const { return st_[q]; }

  bool open(int q, std::int64_t t) const { return st_[q] ? in_any(queues_[q], t) : !st_busy(t); }

  /// End of the open run containing t (kNever when the gate never closes).
  std::int64_t close(int q, std::int64_t t) const {
    if (!st_[q]) return next_st_start(t);
    std::int64_t c = t;
    while (true) {
      bool extended = false;
      for (const auto& w : queues_[q]) {
        const std::int64_t s = instance_start(w, c);
        if (c >= s && c < s + w.length) {
          c = s + w.length;
          extended = true;
        }
      }
      if (!extended) return c;
      if (c - t > cycle_[q]) return kNever;
    }
  }

  /// Next instant after t at which any gate of the port changes state.
  std::int64_t next_event(std::int64_t t) const {
    std::int64_t best = kNever;
    for (const auto& ws : queues_)
      for (const auto& w : ws) {
        const std::int64_t s = instance_start(w, t);
        for (std::int64_t c : {s, s + w.length, s + w.period, s + w.period + w.length})
          if (c > t) best = std::min(best, c);
      }
    return best;
  }

  bool any_windows() const { return any_st_; }

 private:
  static std::int64_t instance_start(const WindowConfig& w, std::int64_t t) {
    std::int64_t k = (t - w.offset) / w.period;
    if ((t - w.offset) % w.period != 0 && t < w.offset) --k;
    return w.offset + k * w.period;
  }
  static bool in_any(const std::vector<WindowConfig>& ws, std::int64_t t) {
    for (const auto& w : ws) {
      const std::int64_t s = instance_start(w, t);
      if (t >= s && t < s + w.length) return true;
    }
    return false;
  }
  bool st_busy(std::int64_t t) const {
    for (int q = 0; q < kQueuesPerPort; ++q)
      if (st_[q] && in_any(queues_[q], t)) return true;
    return false;
  }
  std::int64_t next_st_start(std::int64_t t) const {
    std::int64_t best = kNever;
    for (int q = 0; q < kQueuesPerPort; ++q)
      for (const auto& w : queues_[q]) {
        std::int64_t s = instance_start(w, t);
        if (s <= t) s += w.period;
        best = std::min(best, s);
      }
    return best;
  }

  std::array<std::vector<WindowConfig>, kQueuesPerPort> queues_{};
  std::array<bool, kQueuesPerPort> st_{};
  std::array<std::int64_t, kQueuesPerPort> cycle_{};
  bool any_st_ = false;
};

struct SimConfig {
  std::uint64_t seed = 1;                        // draws per-flow phases in [0, T_f)
  std::map<FlowIndex, std::int64_t> phases_ns;   // explicit phases win over the seed
  bool use_release_offsets = true;               // take scheduled source offsets when present
  std::int64_t duration_us = 0;                  // 0 selects twice the global hyperperiod
  std::int64_t processing_delay_ns = 0;
  bool record_trace = false;
  std::optional<std::size_t> queue_capacity;     // finite queues, diagnostic only
};

struct HopRecord {
  LinkIndex link = 0;
  int queue = 0;
  std::int64_t enqueue_ns = 0;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
};

struct FrameTrace {
  FlowIndex flow = 0;
  std::int64_t instance = 0;
  std::int64_t release_ns = 0;
  std::vector<HopRecord> hops;
  std::int64_t delivered_ns = -1;
};

struct FlowSimStats {
  FlowIndex flow = 0;
  std::size_t delivered = 0;
  std::int64_t max_delay_ns = 0;
  std::int64_t min_delay_ns = kNever;
  double mean_delay_ns = 0.0;
  // Start of transmission on each hop relative to the release, min and max.
  std::vector<std::int64_t> hop_start_min_ns;
  std::vector<std::int64_t> hop_start_max_ns;

  std::int64_t hop_jitter_ns(std::size_t h) const { return hop_start_max_ns.at(h) - hop_start_min_ns.at(h); }
};

struct SimResult {
  std::vector<FlowSimStats> flows;
  std::vector<FrameTrace> trace;
  std::size_t drops = 0;
  std::size_t undelivered = 0;
  std::int64_t end_ns = 0;
};

inline SimResult simulate(const Instance& inst, const Schedule& schedule, const SimConfig& cfg = {}) {
  const std::size_t nflows = inst.flows.size();
  for (FlowIndex f = 0; f < nflows; ++f)
    for (std::size_t h = 1; h < inst.flows[f].route.size(); ++h) {
      const LinkIndex l = inst.flows[f].route[h];
      const int q = schedule.queue_of(inst, f, l);
      if (q < 0 || q >= kQueuesPerPort) throw Error(ErrorCode::ConfigError, "queue index out of range");
      auto it = schedule.windows.find(QueueKey{l, q});
      if (it == schedule.windows.end() || it->second.empty())
        throw Error(ErrorCode::ConfigError, "schedule has no window for " + inst.flows[f].id + " on " + inst.link_name(l));
    }

  const std::int64_t hyper = global_hyperperiod(inst).count();
  const std::int64_t duration_us = cfg.duration_us > 0 ? cfg.duration_us : 2 * hyper;
  if (duration_us < 2 * hyper) throw Error(ErrorCode::ConfigError, "duration shorter than two hyperperiods");
  const std::int64_t horizon = duration_us * 1000;

  std::vector<PortGates> gates(inst.links.size());
  {
    std::map<LinkIndex, std::map<int, std::vector<WindowConfig>>> by_port;
    for (const auto& [key, ws] : schedule.windows) by_port[key.link][key.queue] = ws;
    for (const auto& [l, qs] : by_port) gates.at(l) = PortGates(qs, inst.links[l]);
  }

  std::vector<std::int64_t> phase(nflows, 0);
  {
    std::mt19937_64 rng(cfg.seed);
    for (FlowIndex f = 0; f < nflows; ++f) {
      std::uniform_int_distribution<std::int64_t> dist(0, inst.flows[f].period.count() * 1000 - 1);
      phase[f] = dist(rng);
      if (cfg.use_release_offsets)
        if (auto it = schedule.release_offsets_us.find(f); it != schedule.release_offsets_us.end())
          phase[f] = it->second * 1000;
      if (auto it = cfg.phases_ns.find(f); it != cfg.phases_ns.end()) phase[f] = it->second;
    }
  }

  struct Frame {
    FlowIndex flow;
    std::int64_t instance;
    std::int64_t release;
    std::size_t hop = 0;
    std::vector<HopRecord> hops;
  };
  std::vector<Frame> frames;

  enum class Kind { Release, Arrive, TxDone, Wake };
  struct Event {
    std::int64_t time;
    std::uint64_t seq;
    Kind kind;
    std::size_t a;  // flow (release), frame (arrive / done) or link (wake)
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  auto push = [&](std::int64_t t, Kind k, std::size_t a) { events.push({t, seq++, k, a}); };

  struct Port {
    std::array<std::deque<std::size_t>, kQueuesPerPort> queues;
    std::int64_t busy_until = 0;
    std::optional<std::size_t> in_flight;
    std::int64_t wake_at = kNever;
  };
  std::vector<Port> ports(inst.links.size());

  SimResult res;
  res.flows.resize(nflows);
  for (FlowIndex f = 0; f < nflows; ++f) {
    res.flows[f].flow = f;
    res.flows[f].hop_start_min_ns.assign(inst.flows[f].route.size(), kNever);
    res.flows[f].hop_start_max_ns.assign(inst.flows[f].route.size(), 0);
  }
  std::vector<double> delay_sum(nflows, 0.0);

  auto try_transmit = [&](LinkIndex l, std::int64_t t) {
    Port& p = ports[l];
    if (p.in_flight) return;
    const PortGates& g = gates[l];
    const Link& link = inst.links[l];
    std::array<QueueView, kQueuesPerPort> views{};
    bool backlog = false;
    for (int q = 0; q < kQueuesPerPort; ++q) {
      auto& queue = p.queues[static_cast<std::size_t>(q)];
      if (queue.empty()) continue;
      backlog = true;
      QueueView& v = views[static_cast<std::size_t>(q)];
      v.backlogged = true;
      v.open = g.open(q, t);
      if (v.open) {
        const Frame& fr = frames[queue.front()];
        const std::int64_t tx = transmission_time(inst.wire_bytes(inst.flows[fr.flow]), link).count();
        const std::int64_t close = g.close(q, t);
        v.eligible = close == kNever || t + tx <= close;
      }
    }
    if (!backlog) return;
    if (auto q = strict_priority_select(views)) {
      auto& queue = p.queues[static_cast<std::size_t>(*q)];
      const std::size_t id = queue.front();
      queue.pop_front();
      Frame& fr = frames[id];
      const std::int64_t tx = transmission_time(inst.wire_bytes(inst.flows[fr.flow]), link).count();
      fr.hops.back().start_ns = t;
      fr.hops.back().end_ns = t + tx;
      p.in_flight = id;
      p.busy_until = t + tx;
      push(t + tx, Kind::TxDone, id);
      return;
    }
    const std::int64_t next = g.next_event(t);
    if (next != kNever && next < p.wake_at) {
      p.wake_at = next;
      push(next, Kind::Wake, l);
    }
  };

  auto enqueue = [&](std::size_t id, std::int64_t t) {
    Frame& fr = frames[id];
    const Flow& fl = inst.flows[fr.flow];
    const LinkIndex l = fl.route[fr.hop];
    const int q = schedule.queue_of(inst, fr.flow, l);
    fr.hops.push_back({l, q, t, -1, -1});
    auto& queue = ports[l].queues[static_cast<std::size_t>(q)];
    if (cfg.queue_capacity && queue.size() >= *cfg.queue_capacity) {
      ++res.drops;
      return;
    }
    queue.push_back(id);
    try_transmit(l, t);
  };

  for (FlowIndex f = 0; f < nflows; ++f)
    if (phase[f] < horizon) push(phase[f], Kind::Release, f);

  std::vector<std::int64_t> next_instance(nflows, 0);
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    res.end_ns = ev.time;
    switch (ev.kind) {
      case Kind::Release: {
        const FlowIndex f = ev.a;
        const std::int64_t k = next_instance[f]++;
        frames.push_back({f, k, ev.time, 0, {}});
        enqueue(frames.size() - 1, ev.time);
        const std::int64_t nxt = ev.time + inst.flows[f].period.count() * 1000;
        if (nxt < horizon) push(nxt, Kind::Release, f);
        break;
      }
      case Kind::Arrive:
        enqueue(ev.a, ev.time);
        break;
      case Kind::TxDone: {
        Frame& fr = frames[ev.a];
        const Flow& fl = inst.flows[fr.flow];
        const LinkIndex l = fl.route[fr.hop];
        ports[l].in_flight.reset();
        auto& st = res.flows[fr.flow];
        const std::int64_t rel = fr.hops.back().start_ns - fr.release;
        st.hop_start_min_ns[fr.hop] = std::min(st.hop_start_min_ns[fr.hop], rel);
        st.hop_start_max_ns[fr.hop] = std::max(st.hop_start_max_ns[fr.hop], rel);
        if (fr.hop + 1 == fl.route.size()) {
          const std::int64_t d = ev.time - fr.release;
          ++st.delivered;
          st.max_delay_ns = std::max(st.max_delay_ns, d);
          st.min_delay_ns = std::min(st.min_delay_ns, d);
          delay_sum[fr.flow] += static_cast<double>(d);
          if (cfg.record_trace) res.trace.push_back({fr.flow, fr.instance, fr.release, fr.hops, ev.time});
        } else {
          ++fr.hop;
          push(ev.time + cfg.processing_delay_ns, Kind::Arrive, ev.a);
        }
        try_transmit(l, ev.time);
        break;
      }
      case Kind::Wake: {
        Port& p = ports[ev.a];
        if (p.wake_at == ev.time) p.wake_at = kNever;
        try_transmit(ev.a, ev.time);
        break;
      }
    }
  }

  for (FlowIndex f = 0; f < nflows; ++f) {
    auto& st = res.flows[f];
    if (st.delivered > 0) st.mean_delay_ns = delay_sum[f] / static_cast<double>(st.delivered);
  }
  std::size_t released = frames.size();
  std::size_t delivered = 0;
  for (const auto& st : res.flows) delivered += st.delivered;
  res.undelivered = released - delivered - res.drops;
  return res;
}

}  // namespace tsngcl
