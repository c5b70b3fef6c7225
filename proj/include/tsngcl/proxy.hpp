#pragma once

// Pruning heuristic used inside the window search: the fluid capacity of a
// gate window over the port hyperperiod against the accumulated transmission
// demand of the queue's flows. Neither a necessary nor a sufficient
// schedulability test.

#include <compare>
#include <cstdint>
#include <map>
#include <span>

#include "tsngcl/model.hpp"
#include "tsngcl/schedule.hpp"

namespace tsngcl {

/// Exact area under a cumulative-bytes curve, in units of 1/16 byte x microsecond.
class Area {
 public:
  static constexpr std::int64_t kUnitsPerByteMicro = 16;

  constexpr Area() = default;
  static constexpr Area from_units(std::int64_t units) { return Area(units); }
  static constexpr Area from_byte_micros(std::int64_t v) { return Area(v * kUnitsPerByteMicro); }

  constexpr std::int64_t units() const { return units_; }
  constexpr double byte_micros() const { return static_cast<double>(units_) / kUnitsPerByteMicro; }

  constexpr Area operator+(Area o) const { return Area(units_ + o.units_); }
  constexpr Area operator-(Area o) const { return Area(units_ - o.units_); }
  constexpr Area& operator+=(Area o) {
    units_ += o.units_;
    return *this;
  }
  constexpr auto operator<=>(const Area&) const = default;

 private:
  constexpr explicit Area(std::int64_t u) : units_(u) {}
  std::int64_t units_ = 0;
};

struct CapacityBreakdown {
  Area s1, s2, s3, total;
  std::int64_t bits_per_window = 0;  // J expressed in bits (exact)
  std::int64_t instances = 0;        // I

  double bytes_per_window() const { return static_cast<double>(bits_per_window) / 8.0; }
};

/// Area under the fluid capacity curve of one window over the port hyperperiod.
inline CapacityBreakdown window_capacity(const WindowConfig& window, const Link& link, std::int64_t guard_band_mt,
                                         microseconds hyperperiod) {
  const std::int64_t mt = link.macrotick.count();
  const std::int64_t period = window.period * mt;
  const std::int64_t length = window.length * mt;
  const std::int64_t offset = window.offset * mt;
  const std::int64_t usable = length - guard_band_mt * mt;
  if (usable < 0) throw Error(ErrorCode::WindowTooSmall, "window shorter than its guard band");
  if (period <= 0 || hyperperiod.count() % period != 0)
    throw Error(ErrorCode::NonHarmonicPeriod, "window period does not divide the port hyperperiod");

  CapacityBreakdown c;
  c.instances = hyperperiod.count() / period;
  c.bits_per_window = usable * link.speed_mbps;
  const __int128 i = c.instances;
  const __int128 jbits = c.bits_per_window;
  // S1 = I*w*J/2, S2 = I*(T-w-phi)*J, S3 = I(I-1)/2*T*J with J = jbits/8 bytes.
  c.s1 = Area::from_units(narrow_int64(i * length * jbits));
  c.s2 = Area::from_units(narrow_int64(2 * i * (period - length - offset) * jbits));
  c.s3 = Area::from_units(narrow_int64(i * (i - 1) * period * jbits));
  c.total = c.s1 + c.s2 + c.s3;
  return c;
}

struct DemandFlow {
  FlowIndex flow = 0;
  std::int64_t bytes = 0;
  microseconds period{0};
};

struct DemandBreakdown {
  std::map<FlowIndex, Area> a1;
  std::map<FlowIndex, Area> a2;
  Area total;
};

/// Area under the accumulated-arrival curve of a queue over the hyperperiod:
/// every flow releases at its period starts (A1) and flows forwarded by a switch
/// add a backlog copy delayed by one period (A2, clamped at zero).
inline DemandBreakdown transmission_demand(std::span<const DemandFlow> all, std::span<const DemandFlow> from_switch,
                                           int backlog, microseconds hyperperiod) {
  if (backlog < 1) throw Error(ErrorCode::ConfigError, "backlog must be at least 1");
  auto instances = [&](const DemandFlow& f) -> __int128 {
    if (f.period.count() <= 0 || hyperperiod.count() % f.period.count() != 0)
      throw Error(ErrorCode::NonHarmonicPeriod, "flow period does not divide the hyperperiod");
    return hyperperiod.count() / f.period.count();
  };
  DemandBreakdown d;
  for (const auto& f : all) {
    const __int128 i = instances(f);
    const Area a = Area::from_byte_micros(narrow_int64(i * (i + 1) / 2 * f.period.count() * f.bytes));
    d.a1[f.flow] = a;
    d.total += a;
  }
  for (const auto& f : from_switch) {
    const __int128 i = instances(f);
    __int128 twice = i * (i + 1 - 2 * static_cast<__int128>(backlog));
    if (twice < 0) twice = 0;
    const Area a = Area::from_byte_micros(narrow_int64(twice / 2 * f.period.count() * f.bytes));
    d.a2[f.flow] = a;
    d.total += a;
  }
  return d;
}

struct QueueTiming {
  CapacityBreakdown capacity;
  DemandBreakdown demand;
  bool feasible = false;
  Area margin;  // capacity - demand
};

/// Demand inputs for one queue drawn from the instance.
inline std::pair<std::vector<DemandFlow>, std::vector<DemandFlow>> demand_inputs(const Instance& inst,
                                                                                 const QueueFlows& q) {
  std::pair<std::vector<DemandFlow>, std::vector<DemandFlow>> out;
  for (FlowIndex f : q.all) out.first.push_back({f, inst.wire_bytes(inst.flows[f]), inst.flows[f].period});
  for (FlowIndex f : q.from_switch) out.second.push_back({f, inst.wire_bytes(inst.flows[f]), inst.flows[f].period});
  return out;
}

inline QueueTiming queue_timing(const Instance& inst, const QueueKey& key, const QueueFlows& flows,
                                const WindowConfig& window, int backlog) {
  const Link& link = inst.links.at(key.link);
  const microseconds k = hyperperiod_of_port(inst, key.link);
  QueueTiming t;
  t.capacity = window_capacity(window, link, guard_band_macroticks(inst, flows.all, link), k);
  auto [all, sw] = demand_inputs(inst, flows);
  t.demand = transmission_demand(all, sw, backlog, k);
  t.margin = t.capacity.total - t.demand.total;
  t.feasible = t.demand.total <= t.capacity.total;
  return t;
}

/// Evaluates the capacity/demand comparison for every ST queue of one port.
inline std::map<int, QueueTiming> timing_feasible(const Instance& inst, LinkIndex port, const Schedule& schedule,
                                                  const QueueFlowSets& sets, const AnalysisParams& params) {
  std::map<int, QueueTiming> out;
  for (const auto& [key, flows] : sets.queues) {
    if (key.link != port) continue;
    auto it = schedule.windows.find(key);
    if (it == schedule.windows.end() || it->second.size() != 1)
      throw Error(ErrorCode::ConfigError, "timing check needs exactly one window per ST queue");
    out[key.queue] = queue_timing(inst, key, flows, it->second.front(), params.backlog);
  }
  return out;
}

}  // namespace tsngcl
