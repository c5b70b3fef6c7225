#pragma once

#include <array>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "tsngcl/instance_io.hpp"
#include "tsngcl/model.hpp"

namespace tsngcl {

// Gate-open window <offset, length, period>, all in macroticks of the port's link.
struct WindowConfig {
  std::int64_t offset = 0;
  std::int64_t length = 0;
  std::int64_t period = 1;

  auto operator<=>(const WindowConfig&) const = default;

  bool valid() const { return offset >= 0 && length >= 0 && period > 0 && offset + length <= period; }
  std::int64_t close() const { return offset + length; }
};

/// Gate state at instant t (macroticks): open iff (t mod T) lies in [offset, offset + length).
inline bool gate_open(const WindowConfig& w, std::int64_t t) {
  const std::int64_t r = ((t % w.period) + w.period) % w.period;
  return r >= w.offset && r < w.offset + w.length;
}

/// True when some instance of `a` intersects some instance of `b` (same time base).
inline bool windows_overlap(const WindowConfig& a, const WindowConfig& b) {
  if (a.length == 0 || b.length == 0) return false;
  const std::int64_t g = std::gcd(a.period, b.period);
  const std::int64_t r = (((b.offset - a.offset) % g) + g) % g;
  return r < a.length || g - r < b.length;
}

struct Schedule {
  std::string method;
  std::map<QueueKey, std::vector<WindowConfig>> windows;
  // Frame-level schedules may place a flow in a queue other than its priority.
  std::map<std::pair<FlowIndex, LinkIndex>, int> queue_overrides;
  // Per-flow release offsets (us) at the source, used when sources are scheduled.
  std::map<FlowIndex, std::int64_t> release_offsets_us;

  bool operator==(const Schedule&) const = default;

  int queue_of(const Instance& inst, FlowIndex f, LinkIndex l) const {
    auto it = queue_overrides.find({f, l});
    return it != queue_overrides.end() ? it->second : inst.flows.at(f).priority;
  }

  std::size_t window_count() const {
    std::size_t n = 0;
    for (const auto& [_, ws] : windows) n += ws.size();
    return n;
  }
};

/// Average window utilisation: sum of w/T over all windows divided by the window count.
inline double objective_omega(const Schedule& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [_, ws] : s.windows)
    for (const auto& w : ws) {
      sum += static_cast<double>(w.length) / static_cast<double>(w.period);
      ++n;
    }
  if (n == 0) throw Error(ErrorCode::NoWindows, "schedule has no windows");
  return sum / static_cast<double>(n);
}

struct OpenInterval {
  std::int64_t open = 0;   // macroticks
  std::int64_t close = 0;  // macroticks, exclusive

  bool operator==(const OpenInterval&) const = default;
};

/// Periodic expansion of a queue's windows over [0, horizon).
inline std::vector<OpenInterval> expand_windows(std::span<const WindowConfig> ws, std::int64_t horizon) {
  std::vector<OpenInterval> out;
  for (const auto& w : ws) {
    if (w.length == 0) continue;
    for (std::int64_t base = 0; base < horizon; base += w.period) {
      const std::int64_t open = base + w.offset;
      if (open >= horizon) break;
      out.push_back({open, std::min(open + w.length, horizon)});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.open < b.open; });
  return out;
}

struct GclEntry {
  std::int64_t time = 0;  // macroticks from cycle start
  std::array<bool, kQueuesPerPort> open{};
};

inline std::string gate_vector(const GclEntry& e) {
  std::string s(kQueuesPerPort, '0');
  for (int q = 0; q < kQueuesPerPort; ++q) s[q] = e.open[q] ? '1' : '0';
  return s;
}

/// Expands one port's ST windows into a gate-event list over `cycle` macroticks.
/// Inside an ST window only that queue is open; outside all non-ST queues are open.
inline std::vector<GclEntry> expand_gcl(const std::map<int, std::vector<WindowConfig>>& port_windows,
                                        std::int64_t cycle) {
  std::array<bool, kQueuesPerPort> is_st{};
  std::vector<std::pair<OpenInterval, int>> ivs;
  for (const auto& [q, ws] : port_windows) {
    is_st[q] = true;
    for (const auto& iv : expand_windows(ws, cycle)) ivs.push_back({iv, q});
  }
  std::sort(ivs.begin(), ivs.end(), [](const auto& a, const auto& b) { return a.first.open < b.first.open; });
  std::array<bool, kQueuesPerPort> idle{};
  for (int q = 0; q < kQueuesPerPort; ++q) idle[q] = !is_st[q];

  std::vector<GclEntry> out;
  auto push = [&](std::int64_t t, const std::array<bool, kQueuesPerPort>& st) {
    if (!out.empty() && out.back().time == t) out.back().open = st;
    else if (out.empty() || out.back().open != st) out.push_back({t, st});
  };
  std::int64_t t = 0;
  for (const auto& [iv, q] : ivs) {
    if (iv.open > t || out.empty()) push(t, idle);
    std::array<bool, kQueuesPerPort> st{};
    st[q] = true;
    push(iv.open, st);
    t = iv.close;
  }
  if (t < cycle || out.empty()) push(t, idle);
  return out;
}

// ---------------------------------------------------------------------------
// Schedule file

inline constexpr std::string_view kScheduleFormat = "tsngcl-schedule";

inline json schedule_to_json(const Instance& inst, const Schedule& s, const json& manifest = json()) {
  json j;
  j["format"] = kScheduleFormat;
  j["version"] = 1;
  j["method"] = s.method;
  std::map<LinkIndex, std::map<int, std::vector<WindowConfig>>> by_port;
  for (const auto& [k, ws] : s.windows) by_port[k.link][k.queue] = ws;
  j["ports"] = json::array();
  for (const auto& [l, queues] : by_port) {
    const Link& link = inst.links.at(l);
    std::int64_t cycle = 1;
    for (const auto& [_, ws] : queues)
      for (const auto& w : ws) cycle = checked_lcm(cycle, w.period);
    json port;
    port["node"] = inst.nodes.at(link.src).id;
    port["port"] = inst.link_name(l);
    port["link"] = {inst.nodes.at(link.src).id, inst.nodes.at(link.dst).id};
    port["macrotick_us"] = link.macrotick.count();
    port["cycle_macroticks"] = cycle;
    port["queues"] = json::array();
    for (const auto& [q, ws] : queues) {
      json jq{{"queue", q}, {"windows", json::array()}};
      for (const auto& w : ws) jq["windows"].push_back({{"offset", w.offset}, {"length", w.length}, {"period", w.period}});
      port["queues"].push_back(jq);
    }
    port["gcl"] = json::array();
    for (const auto& e : expand_gcl(queues, cycle)) port["gcl"].push_back({{"time", e.time}, {"gates", gate_vector(e)}});
    j["ports"].push_back(port);
  }
  j["queue_overrides"] = json::array();
  for (const auto& [fl, q] : s.queue_overrides)
    j["queue_overrides"].push_back({{"flow", inst.flows.at(fl.first).id}, {"port", inst.link_name(fl.second)}, {"queue", q}});
  j["release_offsets_us"] = json::object();
  for (const auto& [f, off] : s.release_offsets_us) j["release_offsets_us"][inst.flows.at(f).id] = off;
  if (!manifest.is_null()) j["manifest"] = manifest;
  return j;
}

inline Schedule schedule_from_json(const Instance& inst, const json& j) {
  using detail::field;
  if (!j.is_object() || (j.contains("format") && j.at("format") != kScheduleFormat))
    throw Error(ErrorCode::ParseError, "not a schedule document");
  Schedule s;
  s.method = j.value("method", std::string("unknown"));
  auto link_of = [&](const std::string& a, const std::string& b, const std::string& where) {
    auto na = inst.find_node(a), nb = inst.find_node(b);
    if (!na || !nb) throw Error(ErrorCode::ConfigError, where + ": unknown node");
    auto l = inst.find_link(*na, *nb);
    if (!l) throw Error(ErrorCode::ConfigError, where + ": unknown link " + a + "->" + b);
    return *l;
  };
  const auto& ports = detail::array_field(j, "ports");
  for (std::size_t i = 0; i < ports.size(); ++i) {
    const std::string where = "ports[" + std::to_string(i) + "]";
    const auto ends = field<std::vector<std::string>>(ports[i], "link", where);
    if (ends.size() != 2) throw Error(ErrorCode::ParseError, where + ": link must name two nodes");
    const LinkIndex l = link_of(ends[0], ends[1], where);
    for (const auto& jq : detail::array_field(ports[i], "queues")) {
      const int q = field<int>(jq, "queue", where);
      if (q < 0 || q >= kQueuesPerPort) throw Error(ErrorCode::ConfigError, where + ": queue index out of range");
      auto& dst = s.windows[QueueKey{l, q}];
      for (const auto& jw : detail::array_field(jq, "windows")) {
        WindowConfig w{field<std::int64_t>(jw, "offset", where), field<std::int64_t>(jw, "length", where),
                       field<std::int64_t>(jw, "period", where)};
        if (!w.valid()) throw Error(ErrorCode::ConfigError, where + ": invalid window");
        dst.push_back(w);
      }
    }
  }
  auto flow_of = [&](const std::string& id) {
    for (FlowIndex f = 0; f < inst.flows.size(); ++f)
      if (inst.flows[f].id == id) return f;
    throw Error(ErrorCode::ConfigError, "schedule references unknown flow " + id);
  };
  if (j.contains("queue_overrides"))
    for (const auto& o : j.at("queue_overrides")) {
      const auto port = field<std::string>(o, "port", "queue_overrides");
      const auto arrow = port.find("->");
      if (arrow == std::string::npos) throw Error(ErrorCode::ParseError, "queue_overrides: bad port name");
      s.queue_overrides[{flow_of(field<std::string>(o, "flow", "queue_overrides")),
                         link_of(port.substr(0, arrow), port.substr(arrow + 2), "queue_overrides")}] =
          field<int>(o, "queue", "queue_overrides");
    }
  if (j.contains("release_offsets_us"))
    for (const auto& [id, off] : j.at("release_offsets_us").items()) s.release_offsets_us[flow_of(id)] = off.get<std::int64_t>();
  return s;
}

inline Schedule load_schedule(const Instance& inst, const std::filesystem::path& path) {
  return schedule_from_json(inst, parse_json_text(read_text_file(path), path.string()));
}

}  // namespace tsngcl
