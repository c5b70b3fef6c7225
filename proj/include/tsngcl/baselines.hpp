#pragma once

// Reference schedulers.
//
// zero-jitter (0gcl): every frame gets a fixed offset and queue on every hop;
//   gates open exactly for each frame. Sources are assumed scheduled, so this
//   is a comparison mode only.
// frame-to-window (fgcl): frames are packed into per-queue windows whose length
//   is the sum of their frames; delays count from window open to window close.
// aligned windows (wnd): one window shape per priority, identical on every
//   switch port, stepped until the delay analyzer accepts it.

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsngcl/analysis.hpp"
#include "tsngcl/model.hpp"
#include "tsngcl/schedule.hpp"
#include "tsngcl/synthesis.hpp"

namespace tsngcl {

struct FrameSlot {
  FlowIndex flow = 0;
  std::size_t hop = 0;
  LinkIndex link = 0;
  std::int64_t offset = 0;    // macroticks
  std::int64_t duration = 0;  // macroticks
  std::int64_t period = 0;    // macroticks
  int queue = 0;

  std::int64_t start_us(const Instance& inst) const { return offset * inst.links[link].macrotick.count(); }
  std::int64_t end_us(const Instance& inst) const { return (offset + duration) * inst.links[link].macrotick.count(); }
};

struct FrameSchedulerParams {
  std::int64_t delta_us = 0;
  double time_budget_s = 30.0;
  std::size_t positions_per_frame = 16;  // candidate offsets tried per frame; 0 = all
  bool explore_queues = true;            // allow queues other than the priority
};

struct FrameSchedule {
  std::string method;
  std::vector<FrameSlot> slots;       // flow-major, hop order
  std::vector<std::size_t> first;     // index of each flow's first slot
  // Frame-to-window mode: window id per slot and window bounds (macroticks).
  std::vector<std::size_t> window_of;
  std::vector<FrameSlot> windows;     // duration = window length

  const FrameSlot& slot(FlowIndex f, std::size_t hop) const { return slots.at(first.at(f) + hop); }
};

namespace detail {

inline std::int64_t frame_macroticks(const Instance& inst, FlowIndex f, LinkIndex l) {
  return to_macroticks_ceil(transmission_time(inst.wire_bytes(inst.flows[f]), inst.links[l]), inst.links[l]);
}

inline std::int64_t period_macroticks(const Instance& inst, FlowIndex f, LinkIndex l) {
  const std::int64_t mt = inst.links[l].macrotick.count();
  if (inst.flows[f].period.count() % mt != 0)
    throw Error(ErrorCode::ConfigError, inst.flows[f].id + ": period is not a whole number of macroticks");
  return inst.flows[f].period.count() / mt;
}

/// Some integer multiple of g lies strictly inside (lo, hi).
inline bool multiple_inside(std::int64_t lo, std::int64_t hi, std::int64_t g) {
  if (hi <= lo) return false;
  std::int64_t m = lo / g;
  if (lo % g != 0 && lo < 0) --m;
  return (m + 1) * g < hi;
}

/// Two queue occupancies on one port never meet: occupant i sits in the queue from
/// `arrive_i` (start on the previous hop) until `leave_i`, repeating every period.
inline bool isolated(std::int64_t arrive_i, std::int64_t leave_i, std::int64_t period_i, std::int64_t arrive_j,
                     std::int64_t leave_j, std::int64_t period_j, std::int64_t delta) {
  const std::int64_t g = std::gcd(period_i, period_j);
  // Violation when leave_i + d > arrive_j + k*g and leave_j > arrive_i - k*g - d for some shift k*g.
  return !multiple_inside(arrive_i - leave_j - delta, leave_i - arrive_j + delta, g);
}

inline std::vector<FlowIndex> flow_order(const Instance& inst) {
  std::vector<FlowIndex> order(inst.flows.size());
  std::iota(order.begin(), order.end(), FlowIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](FlowIndex a, FlowIndex b) {
    const auto& fa = inst.flows[a];
    const auto& fb = inst.flows[b];
    return std::tie(fa.deadline, fa.period) < std::tie(fb.deadline, fb.period);
  });
  return order;
}

inline void check_link_load(const Instance& inst) {
  std::map<LinkIndex, double> load;
  for (FlowIndex f = 0; f < inst.flows.size(); ++f)
    for (LinkIndex l : inst.flows[f].route)
      load[l] += static_cast<double>(frame_macroticks(inst, f, l)) / static_cast<double>(period_macroticks(inst, f, l));
  for (const auto& [l, u] : load)
    if (u > 1.0 + 1e-12) throw Error(ErrorCode::Infeasible, inst.link_name(l) + " is overloaded");
}

/// Depth-first placement shared by the frame-level schedulers. `Node` callbacks
/// enumerate candidate placements for one variable in preference order and
/// undo them on backtrack.
class Backtracker {
 public:
  Backtracker(double budget_s, std::string what) : budget_s_(budget_s), what_(std::move(what)) {
    start_ = std::chrono::steady_clock::now();
  }

  void tick() {
    if ((++nodes_ & 255) == 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() > budget_s_)
      throw Error(ErrorCode::Timeout, what_ + ": time budget exhausted after " + std::to_string(nodes_) +
                                          " nodes (deepest variable " + std::to_string(deepest_) + ")");
  }
  void reached(std::size_t depth) { deepest_ = std::max(deepest_, depth); }
  std::size_t nodes() const { return nodes_; }

 private:
  double budget_s_;
  std::string what_;
  std::chrono::steady_clock::time_point start_;
  std::size_t nodes_ = 0;
  std::size_t deepest_ = 0;
};

inline std::vector<int> queue_options(const Flow& f, bool explore) {
  std::vector<int> q{f.priority};
  if (explore)
    for (int k = kQueuesPerPort - 1; k >= 0; --k)
      if (k != f.priority) q.push_back(k);
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Zero-jitter frame schedule

inline FrameSchedule schedule_0gcl(const Instance& inst, const FrameSchedulerParams& p = {}) {
  detail::check_link_load(inst);
  const auto order = detail::flow_order(inst);
  FrameSchedule fs;
  fs.method = "0gcl";
  fs.first.resize(inst.flows.size());
  // Slots stored flow-major in index order; placement follows `order`.
  for (FlowIndex f = 0; f < inst.flows.size(); ++f) {
    fs.first[f] = fs.slots.size();
    for (std::size_t h = 0; h < inst.flows[f].route.size(); ++h) {
      const LinkIndex l = inst.flows[f].route[h];
      fs.slots.push_back({f, h, l, -1, detail::frame_macroticks(inst, f, l), detail::period_macroticks(inst, f, l),
                          inst.flows[f].priority});
    }
  }
  std::vector<std::size_t> vars;
  for (FlowIndex f : order)
    for (std::size_t h = 0; h < inst.flows[f].route.size(); ++h) vars.push_back(fs.first[f] + h);

  std::vector<std::size_t> placed;
  std::map<LinkIndex, std::vector<std::size_t>> on_link;
  detail::Backtracker bt(p.time_budget_s, "0gcl");
  const std::int64_t delta = p.delta_us;

  // Remaining time a flow needs from the start of hop h to delivery.
  auto tail_us = [&](FlowIndex f, std::size_t h) {
    std::int64_t t = 0;
    for (std::size_t k = h; k < inst.flows[f].route.size(); ++k) t += fs.slot(f, k).duration * inst.links[fs.slot(f, k).link].macrotick.count();
    return t + static_cast<std::int64_t>(inst.flows[f].route.size() - 1 - h) * delta;
  };

  // Link conflict of slot s at `offset` with an already placed slot; returns the jump target or nullopt.
  auto link_jump = [&](const FrameSlot& s, std::int64_t offset) -> std::optional<std::int64_t> {
    std::optional<std::int64_t> jump;
    for (std::size_t j : on_link[s.link]) {
      const FrameSlot& o = fs.slots[j];
      const std::int64_t g = std::gcd(s.period, o.period);
      const std::int64_t r = (((o.offset - offset) % g) + g) % g;
      if (g - r < o.duration) jump = std::max(jump.value_or(0), offset + o.duration - (g - r));
      else if (r < s.duration) jump = std::max(jump.value_or(0), offset + r + o.duration);
    }
    return jump;
  };

  auto isolation_ok = [&](const FrameSlot& s) {
    if (s.hop == 0) return true;
    const FrameSlot& sp = fs.slot(s.flow, s.hop - 1);
    for (std::size_t j : on_link[s.link]) {
      const FrameSlot& o = fs.slots[j];
      if (o.hop == 0 || o.queue != s.queue || o.flow == s.flow) continue;
      const FrameSlot& op = fs.slot(o.flow, o.hop - 1);
      if (!detail::isolated(sp.start_us(inst), s.start_us(inst), inst.flows[s.flow].period.count(), op.start_us(inst),
                            o.start_us(inst), inst.flows[o.flow].period.count(), delta))
        return false;
    }
    return true;
  };

  std::function<bool(std::size_t)> place = [&](std::size_t k) -> bool {
    bt.reached(k);
    if (k == vars.size()) return true;
    FrameSlot& s = fs.slots[vars[k]];
    const Flow& fl = inst.flows[s.flow];
    const std::int64_t mt = inst.links[s.link].macrotick.count();
    // The remaining hops must fit before the period ends and before the deadline.
    std::int64_t lo = 0;
    std::int64_t latest = fl.period.count() - tail_us(s.flow, s.hop);
    if (s.hop > 0) {
      const FrameSlot& prev = fs.slot(s.flow, s.hop - 1);
      lo = ceil_div(prev.end_us(inst) + delta, mt);
      const std::int64_t first = fs.slot(s.flow, 0).start_us(inst);
      latest = std::min(latest, first + fl.deadline.count() - delta - tail_us(s.flow, s.hop));
    }
    const std::int64_t hi = latest >= 0 ? latest / mt : -1;
    for (int q : detail::queue_options(fl, p.explore_queues && s.hop > 0)) {
      s.queue = q;
      std::size_t tried = 0;
      std::int64_t gap = 1;  // retries after a failed subtree move geometrically further
      std::int64_t off = lo;
      while (off <= hi) {
        bt.tick();
        if (auto j = link_jump(s, off)) {
          off = *j;
          continue;
        }
        s.offset = off;
        if (!isolation_ok(s)) break;  // later offsets only widen the clash
        on_link[s.link].push_back(vars[k]);
        placed.push_back(vars[k]);
        if (place(k + 1)) return true;
        on_link[s.link].pop_back();
        placed.pop_back();
        if (p.positions_per_frame != 0 && ++tried >= p.positions_per_frame) break;
        off += gap;
        gap *= 2;
      }
      s.offset = -1;
    }
    s.queue = fl.priority;
    return false;
  };

  if (!place(0)) throw Error(ErrorCode::Infeasible, "0gcl: no frame placement satisfies all constraints");
  return fs;
}

// ---------------------------------------------------------------------------
// Frame-to-window schedule

inline FrameSchedule schedule_fgcl(const Instance& inst, const FrameSchedulerParams& p = {}) {
  detail::check_link_load(inst);
  const auto order = detail::flow_order(inst);
  FrameSchedule fs;
  fs.method = "fgcl";
  fs.first.resize(inst.flows.size());
  for (FlowIndex f = 0; f < inst.flows.size(); ++f) {
    fs.first[f] = fs.slots.size();
    for (std::size_t h = 0; h < inst.flows[f].route.size(); ++h) {
      const LinkIndex l = inst.flows[f].route[h];
      fs.slots.push_back({f, h, l, -1, detail::frame_macroticks(inst, f, l), detail::period_macroticks(inst, f, l),
                          inst.flows[f].priority});
    }
  }
  fs.window_of.assign(fs.slots.size(), SIZE_MAX);
  std::vector<std::size_t> vars;
  for (FlowIndex f : order)
    for (std::size_t h = 0; h < inst.flows[f].route.size(); ++h) vars.push_back(fs.first[f] + h);

  const std::int64_t delta = p.delta_us;
  std::vector<std::vector<std::size_t>> members;  // per window
  detail::Backtracker bt(p.time_budget_s, "fgcl");

  auto win_open_us = [&](std::size_t w) { return fs.windows[w].start_us(inst); };
  auto win_close_us = [&](std::size_t w) { return fs.windows[w].end_us(inst); };

  // Time the hops after `s` need at the least, precision gaps included.
  auto tail_after_us = [&](std::size_t s) {
    const FrameSlot& sl = fs.slots[s];
    std::int64_t t = 0;
    for (std::size_t h = sl.hop + 1; h < inst.flows[sl.flow].route.size(); ++h)
      t += fs.slot(sl.flow, h).duration * inst.links[fs.slot(sl.flow, h).link].macrotick.count() + delta;
    return t;
  };
  // Slot s placed in window w still leaves room for its remaining hops.
  auto room_left = [&](std::size_t s, std::size_t w) {
    const FrameSlot& sl = fs.slots[s];
    const Flow& fl = inst.flows[sl.flow];
    std::int64_t end = fl.period.count();
    if (sl.hop > 0) end = std::min(end, win_open_us(fs.window_of[fs.first[sl.flow]]) + fl.deadline.count() - delta);
    return win_close_us(w) + tail_after_us(s) <= end;
  };

  // Full consistency check of every placed window and frame.
  auto consistent = [&]() {
    for (std::size_t a = 0; a < fs.windows.size(); ++a) {
      const FrameSlot& wa = fs.windows[a];
      if (members[a].empty()) continue;
      if (wa.offset < 0 || wa.offset + wa.duration > wa.period) return false;
      for (std::size_t b = a + 1; b < fs.windows.size(); ++b) {
        const FrameSlot& wb = fs.windows[b];
        if (members[b].empty() || wb.link != wa.link) continue;
        if (windows_overlap({wa.offset, wa.duration, wa.period}, {wb.offset, wb.duration, wb.period})) return false;
      }
    }
    for (std::size_t s = 0; s < fs.slots.size(); ++s) {
      const std::size_t w = fs.window_of[s];
      if (w == SIZE_MAX) continue;
      const FrameSlot& sl = fs.slots[s];
      const Flow& fl = inst.flows[sl.flow];
      if (sl.hop > 0) {
        const std::size_t pw = fs.window_of[fs.first[sl.flow] + sl.hop - 1];
        if (win_open_us(w) < win_close_us(pw) + delta) return false;
        // Isolation against other windows of the same queue on this port.
        for (std::size_t t = 0; t < fs.slots.size(); ++t) {
          const std::size_t ow = fs.window_of[t];
          const FrameSlot& ot = fs.slots[t];
          if (ow == SIZE_MAX || ow == w || ot.hop == 0 || ot.link != sl.link || ot.flow == sl.flow) continue;
          if (fs.windows[ow].queue != fs.windows[w].queue) continue;
          const std::size_t opw = fs.window_of[fs.first[ot.flow] + ot.hop - 1];
          if (!detail::isolated(win_open_us(pw), win_close_us(w), fl.period.count(), win_open_us(opw), win_close_us(ow),
                                inst.flows[ot.flow].period.count(), delta))
            return false;
        }
      }
      if (sl.hop + 1 == fl.route.size()) {
        const std::size_t w0 = fs.window_of[fs.first[sl.flow]];
        if (win_close_us(w) - win_open_us(w0) + delta > fl.deadline.count()) return false;
      }
    }
    return true;
  };

  std::function<bool(std::size_t)> place = [&](std::size_t k) -> bool {
    bt.reached(k);
    if (k == vars.size()) return true;
    const std::size_t s = vars[k];
    FrameSlot& sl = fs.slots[s];
    const Flow& fl = inst.flows[sl.flow];
    const std::int64_t mt = inst.links[sl.link].macrotick.count();
    std::int64_t lo = 0;
    if (sl.hop > 0) lo = ceil_div(win_close_us(fs.window_of[s - 1]) + delta, mt);

    // Join an existing window of the same port, queue and period.
    if (sl.hop > 0)
      for (std::size_t w = 0; w < fs.windows.size(); ++w) {
        FrameSlot& win = fs.windows[w];
        if (members[w].empty() || win.link != sl.link || win.queue != fl.priority || win.period != sl.period) continue;
        if (win.offset < lo) continue;
        bt.tick();
        win.duration += sl.duration;
        members[w].push_back(s);
        fs.window_of[s] = w;
        if (room_left(s, w) && consistent() && place(k + 1)) return true;
        fs.window_of[s] = SIZE_MAX;
        members[w].pop_back();
        win.duration -= sl.duration;
      }

    // Open a new window at successive free positions.
    const std::size_t w = fs.windows.size();
    fs.windows.push_back({sl.flow, sl.hop, sl.link, lo, sl.duration, sl.period, fl.priority});
    members.push_back({s});
    fs.window_of[s] = w;
    std::size_t tried = 0;
    std::int64_t gap = 1;
    for (std::int64_t off = lo; off + sl.duration <= sl.period;) {
      bt.tick();
      fs.windows[w].offset = off;
      // Jump past link conflicts with other windows.
      std::optional<std::int64_t> jump;
      for (std::size_t o = 0; o < w; ++o) {
        const FrameSlot& ow = fs.windows[o];
        if (members[o].empty() || ow.link != sl.link) continue;
        const std::int64_t g = std::gcd(sl.period, ow.period);
        const std::int64_t r = (((ow.offset - off) % g) + g) % g;
        if (g - r < ow.duration) jump = std::max(jump.value_or(0), off + ow.duration - (g - r));
        else if (r < sl.duration) jump = std::max(jump.value_or(0), off + r + ow.duration);
      }
      if (jump) {
        off = *jump;
        continue;
      }
      // Past the link jumps only isolation and the deadline can fail, and both
      // get worse as the window moves later.
      if (!room_left(s, w) || !consistent()) break;
      if (place(k + 1)) return true;
      if (p.positions_per_frame != 0 && ++tried >= p.positions_per_frame) break;
      off += gap;
      gap *= 2;
    }
    fs.windows.pop_back();
    members.pop_back();
    fs.window_of[s] = SIZE_MAX;
    return false;
  };

  if (!place(0)) throw Error(ErrorCode::Infeasible, "fgcl: no frame-to-window assignment satisfies all constraints");
  // Frames inside a window are sent back to back in assignment order.
  for (std::size_t w = 0; w < fs.windows.size(); ++w) {
    std::int64_t at = fs.windows[w].offset;
    for (std::size_t s : members[w]) {
      fs.slots[s].offset = at;
      at += fs.slots[s].duration;
    }
  }
  return fs;
}

/// Gate windows, queue overrides and source offsets of a frame-level schedule.
inline Schedule to_schedule(const Instance& inst, const FrameSchedule& fs) {
  Schedule s;
  s.method = fs.method;
  auto add = [&](const FrameSlot& w) {
    if (!inst.is_switch_port(w.link)) return;
    s.windows[QueueKey{w.link, w.queue}].push_back({w.offset, w.duration, w.period});
  };
  if (fs.windows.empty()) {
    for (const auto& sl : fs.slots) add(sl);
  } else {
    for (std::size_t w = 0; w < fs.windows.size(); ++w)
      if (std::find(fs.window_of.begin(), fs.window_of.end(), w) != fs.window_of.end()) add(fs.windows[w]);
  }
  for (auto& [_, ws] : s.windows) std::sort(ws.begin(), ws.end());
  for (const auto& sl : fs.slots) {
    if (sl.hop > 0 && sl.queue != inst.flows[sl.flow].priority) s.queue_overrides[{sl.flow, sl.link}] = sl.queue;
    if (sl.hop == 0) {
      const std::int64_t off = fs.windows.empty() ? sl.start_us(inst) : fs.windows[fs.window_of[fs.first[sl.flow]]].start_us(inst);
      s.release_offsets_us[sl.flow] = off;
    }
  }
  return s;
}

/// Frame-level delays: first transmission start to last completion plus the precision.
inline DelayReport frame_schedule_delays(const Instance& inst, const FrameSchedule& fs, std::int64_t delta_us) {
  DelayReport rep;
  for (FlowIndex f = 0; f < inst.flows.size(); ++f) {
    const Flow& fl = inst.flows[f];
    FlowDelay d;
    d.flow = f;
    const std::size_t last = fl.route.size() - 1;
    std::int64_t begin = fs.slot(f, 0).start_us(inst);
    std::int64_t end = fs.slot(f, last).end_us(inst);
    if (!fs.windows.empty()) {
      begin = fs.windows[fs.window_of[fs.first[f]]].start_us(inst);
      end = fs.windows[fs.window_of[fs.first[f] + last]].end_us(inst);
    }
    std::int64_t prev = begin;
    for (std::size_t h = 0; h <= last; ++h) {
      const std::int64_t e = fs.windows.empty() ? fs.slot(f, h).end_us(inst) : fs.windows[fs.window_of[fs.first[f] + h]].end_us(inst);
      d.per_hop_us.push_back(static_cast<double>(e - prev));
      prev = e;
    }
    d.wcd_us = static_cast<double>(end - begin + delta_us);
    d.schedulable = d.wcd_us <= static_cast<double>(fl.deadline.count());
    rep.flows.push_back(std::move(d));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Aligned windows

struct WndParams {
  double time_budget_s = 60.0;
};

struct WndResult {
  Schedule schedule;
  DelayReport report;
  double omega = 0.0;
  std::map<int, WindowConfig> shapes;  // per priority, shared by every port
  std::size_t analyzer_calls = 0;
};

inline WndResult schedule_wnd(const Instance& inst, const DelayAnalyzer& analyzer, const AnalysisParams& ap = {},
                              const WndParams& wp = {}) {
  const auto start = std::chrono::steady_clock::now();
  const Domains d = build_domains(inst);
  if (d.queues.empty()) throw Error(ErrorCode::NoWindows, "no switch port carries a flow");
  std::int64_t mt = 0;
  std::int64_t g = 0;
  std::map<int, std::int64_t> min_len;
  for (const auto& q : d.queues) {
    const std::int64_t m = inst.links[q.key.link].macrotick.count();
    if (mt != 0 && m != mt) throw Error(ErrorCode::ConfigError, "aligned windows need one macrotick on all switch ports");
    mt = m;
    g = std::gcd(g, q.hyperperiod_mt);
    min_len[q.key.queue] = std::max(min_len[q.key.queue], q.min_length);
  }
  std::vector<int> prios;  // highest first
  for (auto it = min_len.rbegin(); it != min_len.rend(); ++it) prios.push_back(it->first);

  WndResult res;
  std::optional<OmegaValue> best;

  auto build = [&](std::int64_t t, const std::map<int, std::int64_t>& len) {
    std::map<int, WindowConfig> shapes;
    std::int64_t at = 0;
    for (int p : prios) {
      shapes[p] = {at, len.at(p), t};
      at += len.at(p);
    }
    Schedule s;
    s.method = "wnd";
    Assignment a;
    for (const auto& q : d.queues) {
      s.windows[q.key] = {shapes[q.key.queue]};
      a.push_back(shapes[q.key.queue]);
    }
    return std::make_tuple(shapes, s, a);
  };
  auto late_priorities = [&](const DelayReport& r) {
    std::set<int> out;
    for (const auto& fd : r.flows)
      if (!fd.schedulable) out.insert(inst.flows[fd.flow].priority);
    return out;
  };
  auto analyze = [&](const Schedule& s) {
    ++res.analyzer_calls;
    return analyzer.analyze(inst, s, ap);
  };
  auto timed_out = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > wp.time_budget_s;
  };

  auto periods = divisors(g);
  std::int64_t floor_len = 0;
  for (const auto& [_, l] : min_len) floor_len += l;
  for (auto it = periods.rbegin(); it != periods.rend() && !timed_out(); ++it) {
    const std::int64_t t = *it;
    if (floor_len > t) break;
    std::map<int, std::int64_t> len = min_len;
    std::map<int, std::int64_t> step;
    for (int p : prios) step[p] = 1;
    std::optional<DelayReport> ok;
    while (!timed_out()) {
      std::int64_t total = 0;
      for (const auto& [_, l] : len) total += l;
      if (total > t) break;
      auto [shapes, s, a] = build(t, len);
      DelayReport r = analyze(s);
      const auto late = late_priorities(r);
      if (late.empty()) {
        ok = std::move(r);
        break;
      }
      // Flows of one priority only see that priority's windows, so grow just those.
      for (int p : late) {
        len[p] += step[p];
        step[p] *= 2;
      }
    }
    if (!ok) continue;
    // Shrink each priority back to the smallest accepted length.
    for (int p : prios) {
      std::int64_t lo = min_len[p], hi = len[p];
      while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        auto trial = len;
        trial[p] = mid;
        auto [shapes, s, a] = build(t, trial);
        if (late_priorities(analyze(s)).count(p) == 0) hi = mid;
        else lo = mid + 1;
      }
      len[p] = hi;
    }
    auto [shapes, s, a] = build(t, len);
    DelayReport r = analyze(s);
    if (!r.all_schedulable()) continue;
    const OmegaValue om = omega_of(a);
    if (!best || om < *best || (om == *best && r.mean_wcd() < res.report.mean_wcd())) {
      best = om;
      res.schedule = s;
      res.report = std::move(r);
      res.omega = om.value;
      res.shapes = shapes;
    }
  }
  if (!best) throw Error(ErrorCode::NoFeasibleSolutionFound, "wnd: no aligned window shape accepted by the analyzer");
  return res;
}

}  // namespace tsngcl
