#pragma once

// Standalone structural validator for window schedules. It works on an
// explicit per-macrotick timeline and exact rational bandwidth sums, so it
// shares no code with the constraint checker used during the search.

#include <string>
#include <vector>

#include "tsngcl/model.hpp"
#include "tsngcl/schedule.hpp"

namespace tsngcl {

struct GclRules {
  bool single_window_per_queue = true;
  bool harmonic_periods = true;
  bool periods_divide_hyperperiod = true;
  bool bandwidth = true;
};

struct GclIssue {
  std::string rule;  // "bounds", "overlap", "bandwidth", "harmonic", "divisor", "coverage"
  std::string port;
  std::string detail;
};

inline std::vector<GclIssue> validate_gcl(const Instance& inst, const Schedule& s, const GclRules& rules = {}) {
  std::vector<GclIssue> out;
  auto add = [&](const char* rule, LinkIndex l, std::string detail) {
    out.push_back({rule, inst.link_name(l), std::move(detail)});
  };

  // Coverage: every switch queue carrying a flow owns at least one window.
  for (FlowIndex f = 0; f < inst.flows.size(); ++f)
    for (std::size_t h = 1; h < inst.flows[f].route.size(); ++h) {
      const LinkIndex l = inst.flows[f].route[h];
      const QueueKey key{l, s.queue_of(inst, f, l)};
      auto it = s.windows.find(key);
      if (it == s.windows.end() || it->second.empty())
        add("coverage", l, "queue " + std::to_string(key.queue) + " used by " + inst.flows[f].id + " has no window");
    }

  std::map<LinkIndex, std::vector<std::pair<int, WindowConfig>>> by_port;
  for (const auto& [key, ws] : s.windows) {
    if (rules.single_window_per_queue && ws.size() != 1)
      add("bounds", key.link, "queue " + std::to_string(key.queue) + " has " + std::to_string(ws.size()) + " windows");
    for (const auto& w : ws) {
      by_port[key.link].push_back({key.queue, w});
      if (w.offset < 0 || w.length < 0 || w.period <= 0 || w.offset + w.length > w.period)
        add("bounds", key.link, "window exceeds its period");
    }
  }

  for (const auto& [l, list] : by_port) {
    // Harmonic periods and divisibility of the port hyperperiod.
    std::int64_t hyper_mt = 0;
    bool has_flows = false;
    for (const auto& f : inst.flows) has_flows = has_flows || route_contains(f, l);
    if (has_flows) {
      const std::int64_t k = hyperperiod_of_port(inst, l).count();
      const std::int64_t mt = inst.links[l].macrotick.count();
      hyper_mt = k % mt == 0 ? k / mt : 0;
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::int64_t t = list[i].second.period;
      if (t <= 0) continue;
      if (rules.periods_divide_hyperperiod && (hyper_mt == 0 || hyper_mt % t != 0))
        add("divisor", l, "period " + std::to_string(t) + " does not divide the port hyperperiod");
      if (rules.harmonic_periods)
        for (std::size_t j = i + 1; j < list.size(); ++j) {
          const std::int64_t u = list[j].second.period;
          if (u > 0 && t % u != 0 && u % t != 0)
            add("harmonic", l, "periods " + std::to_string(t) + " and " + std::to_string(u) + " are not harmonic");
        }
    }

    // Overlap: paint every window instance on a macrotick timeline.
    std::int64_t cycle = 1;
    bool periods_ok = true;
    for (const auto& [_, w] : list) {
      if (w.period <= 0 || w.offset < 0 || w.length < 0) periods_ok = false;
      else cycle = checked_lcm(cycle, w.period);
    }
    if (!periods_ok) continue;
    if (cycle > 50'000'000) {
      add("overlap", l, "cycle too long to audit");
      continue;
    }
    std::vector<std::int16_t> owner(static_cast<std::size_t>(cycle), -1);
    bool reported = false;
    for (std::size_t i = 0; i < list.size() && !reported; ++i) {
      const auto& w = list[i].second;
      for (std::int64_t base = 0; base < cycle && !reported; base += w.period)
        for (std::int64_t t = base + w.offset; t < base + w.offset + w.length; ++t) {
          auto& o = owner[static_cast<std::size_t>(t % cycle)];
          if (o >= 0) {
            add("overlap", l,
                "windows of queues " + std::to_string(list[static_cast<std::size_t>(o)].first) + " and " +
                    std::to_string(list[i].first) + " share macrotick " + std::to_string(t % cycle));
            reported = true;
            break;
          }
          o = static_cast<std::int16_t>(i);
        }
    }
  }

  // Bandwidth: sum of w/T of a queue's windows against sum of tx/T_f of its flows.
  if (rules.bandwidth) {
    std::map<QueueKey, std::vector<FlowIndex>> members;
    for (FlowIndex f = 0; f < inst.flows.size(); ++f)
      for (std::size_t h = 1; h < inst.flows[f].route.size(); ++h) {
        const LinkIndex l = inst.flows[f].route[h];
        members[QueueKey{l, s.queue_of(inst, f, l)}].push_back(f);
      }
    for (const auto& [key, flows] : members) {
      auto it = s.windows.find(key);
      if (it == s.windows.end()) continue;
      const Link& link = inst.links[key.link];
      // Both sides as numerators over one common denominator.
      std::int64_t den = 1;
      for (const auto& w : it->second) den = checked_lcm(den, w.period * link.macrotick.count() * 1000);
      for (FlowIndex f : flows) den = checked_lcm(den, inst.flows[f].period.count() * 1000);
      __int128 supply = 0, demand = 0;
      for (const auto& w : it->second) supply += static_cast<__int128>(w.length) * (den / w.period);
      for (FlowIndex f : flows)
        demand += static_cast<__int128>(transmission_time(inst.wire_bytes(inst.flows[f]), link).count()) *
                  (den / (inst.flows[f].period.count() * 1000));
      if (supply < demand)
        add("bandwidth", key.link, "queue " + std::to_string(key.queue) + " window share below its load");
    }
  }
  return out;
}

}  // namespace tsngcl
