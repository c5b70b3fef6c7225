#pragma once

// Conservative worst-case end-to-end delay analysis for window schedules with
// unsynchronised end systems.
//
// Sources transmit under non-preemptive strict priority with no gates. Every
// switch queue is a FIFO served through its gate windows, phase-oblivious:
// a single periodic window is a TDMA staircase service, several windows fall
// back to their rate-latency envelope (usable window time excludes the guard
// band). Same-queue flows are aggregated; each arrival is a token bucket capped
// by the upstream line rate. Per-flow bursts grow by rate x hop delay and the
// burst vector is iterated to a fixed point so cyclic port dependencies are
// covered.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsngcl/curves.hpp"
#include "tsngcl/model.hpp"
#include "tsngcl/schedule.hpp"

namespace tsngcl {

struct FlowDelay {
  FlowIndex flow = 0;
  double wcd_us = 0.0;
  std::vector<double> per_hop_us;
  bool schedulable = false;
  bool unstable = false;
};

struct DelayReport {
  std::vector<FlowDelay> flows;

  bool all_schedulable() const {
    return std::all_of(flows.begin(), flows.end(), [](const auto& f) { return f.schedulable; });
  }
  std::size_t unschedulable_count() const {
    return static_cast<std::size_t>(std::count_if(flows.begin(), flows.end(), [](const auto& f) { return !f.schedulable; }));
  }
  double mean_wcd() const {
    if (flows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& f : flows) s += f.wcd_us;
    return s / static_cast<double>(flows.size());
  }
};

/// Pluggable analysis used by the synthesis loop.
class DelayAnalyzer {
 public:
  virtual ~DelayAnalyzer() = default;
  virtual std::string name() const = 0;
  virtual DelayReport analyze(const Instance& inst, const Schedule& schedule, const AnalysisParams& params) const = 0;
};

// ---------------------------------------------------------------------------
// Curve builders

/// Upper arrival envelope of a strictly periodic flow: one frame burst plus its long-run rate.
inline TokenBucket flow_token_bucket(const Instance& inst, const Flow& f) {
  const double bytes = static_cast<double>(inst.wire_bytes(f));
  return {bytes, bytes / static_cast<double>(f.period.count())};
}

inline CumulativeCurve flow_arrival_curve(const Instance& inst, const Flow& f) {
  return flow_token_bucket(inst, f).curve();
}

inline double link_bytes_per_us(const Link& link) { return static_cast<double>(link.speed_mbps) / 8.0; }

/// Rate-latency lower service curve of a set of periodic windows for one queue.
/// Returns rate 0 when no window has usable time beyond the guard band.
inline RateLatency tdma_service(std::span<const WindowConfig> windows, const Link& link, std::int64_t guard_band_mt) {
  const double mt = static_cast<double>(link.macrotick.count());
  const double gb = static_cast<double>(guard_band_mt) * mt;
  const double c = link_bytes_per_us(link);
  std::vector<WindowConfig> usable;
  for (const auto& w : windows)
    if (w.length > guard_band_mt) usable.push_back(w);
  if (usable.empty()) return {0.0, kInf};
  if (usable.size() == 1) {
    const double period = static_cast<double>(usable[0].period) * mt;
    const double s = static_cast<double>(usable[0].length) * mt - gb;
    return {c * s / period, period - s};
  }

  std::int64_t cycle = 1;
  for (const auto& w : usable) cycle = checked_lcm(cycle, w.period);
  std::vector<std::pair<double, double>> ivs;
  for (const auto& w : usable)
    for (std::int64_t base = 0; base < cycle; base += w.period) {
      const double open = static_cast<double>(base + w.offset) * mt;
      ivs.push_back({open, open + static_cast<double>(w.length) * mt - gb});
    }
  std::sort(ivs.begin(), ivs.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : ivs) {
    if (!merged.empty() && iv.first <= merged.back().second) merged.back().second = std::max(merged.back().second, iv.second);
    else merged.push_back(iv);
  }
  const double horizon = static_cast<double>(cycle) * mt;
  double total = 0.0;
  for (const auto& [a, b] : merged) total += b - a;
  const double rho = total / horizon;
  const std::size_t n = merged.size();
  // Worst latency: start right after a usable interval ends, measured at the
  // start of a later usable interval.
  double latency = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = merged[i].second;
    double served = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::size_t j = (i + k) % n;
      const double shift = (i + k >= n) ? horizon : 0.0;
      const double y = merged[j].first + shift;
      latency = std::max(latency, (y - x) - served / rho);
      served += merged[j].second - merged[j].first;
    }
  }
  return {c * rho, latency};
}

inline CumulativeCurve window_service_curve(const WindowConfig& w, const Link& link, std::int64_t guard_band_mt) {
  if (w.length <= guard_band_mt) throw Error(ErrorCode::WindowTooSmall, "window not longer than its guard band");
  const WindowConfig ws[] = {w};
  return tdma_service(ws, link, guard_band_mt).curve();
}

/// Horizontal deviation plus the transmission of `max_frame_bytes`, rounded up to the macrotick.
inline double hop_delay_bound(const CumulativeCurve& arrival, const CumulativeCurve& service,
                              std::int64_t max_frame_bytes, const Link& link) {
  const double h = horizontal_deviation(arrival, service) + transmission_us(max_frame_bytes, link);
  return ceil_to_step(h, static_cast<double>(link.macrotick.count()));
}

inline CumulativeCurve output_arrival_curve(const CumulativeCurve& arrival, const CumulativeCurve& service) {
  return deconvolve(arrival, service);
}

/// One flow entering a hop: its token bucket capped by the upstream line,
/// min(frame + line_rate * t, burst + rate * t).
struct ShapedArrival {
  double burst = 0.0;
  double rate = 0.0;
  double frame = 0.0;
  double line_rate = kInf;
};

/// Delay bound of a FIFO rate-latency server fed by line-shaped token buckets.
/// Infinite when the server is overloaded.
inline double shaped_delay(std::span<const ShapedArrival> flows, const RateLatency& s) {
  double rate_sum = 0.0;
  std::vector<double> knees{0.0};
  for (const auto& f : flows) {
    if (!std::isfinite(f.burst)) return kInf;
    rate_sum += f.rate;
    if (f.burst > f.frame && f.line_rate > f.rate) knees.push_back((f.burst - f.frame) / (f.line_rate - f.rate));
  }
  if (s.rate <= 0.0 || rate_sum > s.rate + 1e-12) return kInf;
  // The aggregate is concave, so the largest backlog-to-rate excess sits on a knee.
  double worst = 0.0;
  for (double t : knees) {
    double a = 0.0;
    for (const auto& f : flows) a += std::min(f.frame + f.line_rate * t, f.burst + f.rate * t);
    worst = std::max(worst, a / s.rate - t);
  }
  return s.latency + worst;
}

/// One periodic usable slot of `slot` us every `period` us served at `rate`
/// bytes/us. Its worst-case service starts just after a slot closes:
/// beta(t) = rate * (floor(t/T) * slot + max(0, t mod T - (T - slot))).
struct PeriodicSlot {
  double period = 0.0;
  double slot = 0.0;
  double rate = 0.0;

  /// Right limit of the pseudo-inverse: time by which more than x bytes are served.
  double time_to_serve(double x) const {
    const double per_slot = slot * rate;
    const double k = std::floor(x / per_slot);
    return k * period + (period - slot) + (x - k * per_slot) / rate;
  }
};

/// Delay bound of a FIFO queue behind one periodic slot, fed by line-shaped
/// token buckets. Candidates are t = 0, the knees of the aggregate arrival and
/// the instants it crosses a whole number of slot capacities.
inline double shaped_delay(std::span<const ShapedArrival> flows, const PeriodicSlot& s) {
  if (s.slot <= 0.0 || s.rate <= 0.0) return kInf;
  double rate_sum = 0.0;
  std::vector<double> knees{0.0};
  for (const auto& f : flows) {
    if (!std::isfinite(f.burst)) return kInf;
    rate_sum += f.rate;
    if (f.burst > f.frame && f.line_rate > f.rate) knees.push_back((f.burst - f.frame) / (f.line_rate - f.rate));
  }
  const double per_slot = s.slot * s.rate;
  if (rate_sum * s.period > per_slot * (1.0 + 1e-12)) return kInf;
  std::sort(knees.begin(), knees.end());
  knees.erase(std::unique(knees.begin(), knees.end()), knees.end());
  auto alpha = [&](double t) {
    double a = 0.0;
    for (const auto& f : flows) a += std::min(f.frame + f.line_rate * t, f.burst + f.rate * t);
    return a;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < knees.size(); ++i) {
    const double t0 = knees[i];
    const double a0 = alpha(t0);
    worst = std::max(worst, s.time_to_serve(a0) - t0);
    if (i + 1 < knees.size()) {
      // Crossings of k * per_slot inside this linear piece.
      const double t1 = knees[i + 1];
      const double a1 = alpha(t1);
      const double slope = (a1 - a0) / (t1 - t0);
      if (slope <= 0.0) continue;
      for (double k = std::floor(a0 / per_slot) + 1.0; k * per_slot < a1; k += 1.0)
        worst = std::max(worst, s.time_to_serve(k * per_slot) - (t0 + (k * per_slot - a0) / slope));
    } else if (rate_sum > 0.0) {
      // Last piece grows at the long-run rate; the first crossing dominates later ones.
      const double k = std::floor(a0 / per_slot) + 1.0;
      worst = std::max(worst, s.time_to_serve(k * per_slot) - (t0 + (k * per_slot - a0) / rate_sum));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Network analysis

class TdmaAnalyzer final : public DelayAnalyzer {
 public:
  std::size_t max_iterations = 200;
  double divergence_cap_us = 1e9;

  std::string name() const override { return "tdma"; }

  DelayReport analyze(const Instance& inst, const Schedule& schedule, const AnalysisParams& params) const override {
    // The per-queue servers ignore strict-priority interference, which only exists when windows overlap.
    for (auto a = schedule.windows.begin(); a != schedule.windows.end(); ++a)
      for (auto b = std::next(a); b != schedule.windows.end() && b->first.link == a->first.link; ++b)
        for (const auto& wa : a->second)
          for (const auto& wb : b->second)
            if (windows_overlap(wa, wb))
              throw Error(ErrorCode::ValidationFailed, "windows of queues " + std::to_string(a->first.queue) + " and " +
                                                           std::to_string(b->first.queue) + " overlap on " +
                                                           inst.link_name(a->first.link));
    const std::size_t nflows = inst.flows.size();
    std::vector<double> rate(nflows);
    std::vector<double> frame(nflows);
    for (FlowIndex f = 0; f < nflows; ++f) {
      const auto tb = flow_token_bucket(inst, inst.flows[f]);
      rate[f] = tb.rate;
      frame[f] = tb.burst;
    }

    // Source stage: one delay per (source port, priority), independent of bursts.
    std::vector<double> source_delay(nflows);
    for (FlowIndex f = 0; f < nflows; ++f) source_delay[f] = source_hop_delay(inst, f, rate, frame);

    // Gated stages.
    struct Server {
      QueueKey key;
      RateLatency service;
      std::optional<PeriodicSlot> slot;  // set when the queue has a single usable window
      std::vector<std::pair<FlowIndex, std::size_t>> members;
      double delay = 0.0;
    };
    std::map<QueueKey, std::size_t> index;
    std::vector<Server> servers;
    std::vector<std::vector<std::size_t>> hop_server(nflows);
    for (FlowIndex f = 0; f < nflows; ++f) {
      const Flow& fl = inst.flows[f];
      hop_server[f].assign(fl.route.size(), SIZE_MAX);
      for (std::size_t h = 1; h < fl.route.size(); ++h) {
        const QueueKey key{fl.route[h], schedule.queue_of(inst, f, fl.route[h])};
        auto [it, inserted] = index.try_emplace(key, servers.size());
        if (inserted) servers.push_back(Server{key, {}, std::nullopt, {}, 0.0});
        servers[it->second].members.push_back({f, h});
        hop_server[f][h] = it->second;
      }
    }
    for (auto& s : servers) {
      auto it = schedule.windows.find(s.key);
      if (it == schedule.windows.end() || it->second.empty())
        throw Error(ErrorCode::ConfigError, "no window for queue " + std::to_string(s.key.queue) + " on " +
                                                inst.link_name(s.key.link));
      std::vector<FlowIndex> fl;
      for (const auto& [f, _] : s.members) fl.push_back(f);
      const Link& link = inst.links[s.key.link];
      // A window spanning its whole period never closes, so nothing is lost to the guard band.
      const bool always_open = it->second.size() == 1 && it->second.front().length == it->second.front().period;
      const std::int64_t gb = always_open ? 0 : guard_band_macroticks(inst, fl, link);
      s.service = tdma_service(it->second, link, gb);
      if (it->second.size() == 1 && it->second.front().length > gb) {
        const double mt = static_cast<double>(link.macrotick.count());
        s.slot = PeriodicSlot{static_cast<double>(it->second.front().period) * mt,
                              static_cast<double>(it->second.front().length - gb) * mt, link_bytes_per_us(link)};
      }
    }

    std::vector<std::vector<double>> burst(nflows);
    for (FlowIndex f = 0; f < nflows; ++f) burst[f].assign(inst.flows[f].route.size(), frame[f]);

    auto hop_delay = [&](FlowIndex f, std::size_t h) {
      return h == 0 ? source_delay[f] : servers[hop_server[f][h]].delay;
    };
    auto server_delay = [&](const Server& s) {
      std::vector<ShapedArrival> in;
      for (const auto& [f, h] : s.members)
        in.push_back({burst[f][h], rate[f], frame[f], link_bytes_per_us(inst.links[inst.flows[f].route[h - 1]])});
      const double h = s.slot ? shaped_delay(in, *s.slot) : shaped_delay(in, s.service);
      if (!std::isfinite(h)) return kInf;
      const double d = ceil_to_step(h, static_cast<double>(inst.links[s.key.link].macrotick.count()));
      return d > divergence_cap_us ? kInf : d;
    };

    bool settled = false;
    for (std::size_t iter = 0; iter < max_iterations && !settled; ++iter) {
      settled = step(servers, burst, rate, hop_delay, server_delay, inst);
    }
    if (!settled) {
      // Still growing: give up on the servers that keep changing.
      for (std::size_t guard = 0; guard < servers.size() + 2; ++guard) {
        bool changed = false;
        for (auto& s : servers) {
          const double d = server_delay(s);
          if (std::isfinite(s.delay) && d != s.delay) {
            s.delay = kInf;
            changed = true;
          }
        }
        propagate(burst, rate, hop_delay, inst);
        if (!changed) break;
      }
    }

    DelayReport rep;
    const double mt_delta = static_cast<double>(params.delta_precision.count());
    const double proc = static_cast<double>(params.processing_delay.count());
    for (FlowIndex f = 0; f < nflows; ++f) {
      const Flow& fl = inst.flows[f];
      FlowDelay d;
      d.flow = f;
      d.wcd_us = mt_delta;
      for (std::size_t h = 0; h < fl.route.size(); ++h) {
        const double hd = hop_delay(f, h);
        d.per_hop_us.push_back(hd);
        d.wcd_us += hd + (h > 0 ? proc : 0.0);
      }
      d.unstable = !std::isfinite(d.wcd_us);
      d.schedulable = !d.unstable && d.wcd_us <= static_cast<double>(fl.deadline.count()) + 1e-9;
      rep.flows.push_back(std::move(d));
    }
    return rep;
  }

 private:
  // Delay of `f` on its first link: a non-preemptive strict-priority server with
  // leftover rate C - r_higher and latency (b_higher + L_lower) / (C - r_higher).
  static double source_hop_delay(const Instance& inst, FlowIndex f, const std::vector<double>& rate,
                                 const std::vector<double>& frame) {
    const Flow& fl = inst.flows[f];
    const LinkIndex port = fl.route.front();
    const Link& link = inst.links[port];
    double b_same = 0.0, r_same = 0.0, b_high = 0.0, r_high = 0.0, l_low = 0.0;
    for (FlowIndex g = 0; g < inst.flows.size(); ++g) {
      const Flow& gl = inst.flows[g];
      if (gl.route.front() != port) continue;
      if (gl.priority == fl.priority) {
        b_same += frame[g];
        r_same += rate[g];
      } else if (gl.priority > fl.priority) {
        b_high += frame[g];
        r_high += rate[g];
      } else {
        l_low = std::max(l_low, frame[g]);
      }
    }
    const double leftover = link_bytes_per_us(link) - r_high;
    if (leftover <= 0.0 || r_same > leftover + 1e-12) return kInf;
    const double h = (b_high + l_low) / leftover + b_same / leftover;
    return ceil_to_step(h, static_cast<double>(link.macrotick.count()));
  }

  template <typename HopDelay>
  static void propagate(std::vector<std::vector<double>>& burst, const std::vector<double>& rate,
                        const HopDelay& hop_delay, const Instance& inst) {
    for (FlowIndex f = 0; f < inst.flows.size(); ++f)
      for (std::size_t h = 1; h < burst[f].size(); ++h)
        burst[f][h] = burst[f][h - 1] + rate[f] * hop_delay(f, h - 1);
  }

  template <typename Servers, typename HopDelay, typename ServerDelay>
  static bool step(Servers& servers, std::vector<std::vector<double>>& burst, const std::vector<double>& rate,
                   const HopDelay& hop_delay, const ServerDelay& server_delay, const Instance& inst) {
    bool changed = false;
    for (auto& s : servers) {
      const double d = server_delay(s);
      if (d != s.delay) {
        s.delay = d;
        changed = true;
      }
    }
    propagate(burst, rate, hop_delay, inst);
    return !changed;
  }
};

/// End-to-end bound for one flow under the default analyzer.
inline FlowDelay flow_wcd(const Instance& inst, FlowIndex flow, const Schedule& schedule, const AnalysisParams& params) {
  return TdmaAnalyzer{}.analyze(inst, schedule, params).flows.at(flow);
}

}  // namespace tsngcl
