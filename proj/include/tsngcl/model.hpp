#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsngcl/error.hpp"
#include "tsngcl/numeric.hpp"

namespace tsngcl {

using std::chrono::microseconds;
using std::chrono::nanoseconds;

using NodeIndex = std::size_t;
using LinkIndex = std::size_t;
using FlowIndex = std::size_t;

inline constexpr int kQueuesPerPort = 8;

enum class NodeKind { EndSystem, Switch };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::EndSystem;

  bool operator==(const Node&) const = default;
};

// Directed half of a full-duplex link; one egress port per link.
struct Link {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  std::int64_t speed_mbps = 100;  // numerically bits per microsecond
  microseconds macrotick{1};
  microseconds propagation{0};

  bool operator==(const Link&) const = default;
};

struct Flow {
  std::string id;
  std::int64_t payload_bytes = 0;
  microseconds period{0};
  int priority = 0;
  microseconds deadline{0};
  std::vector<LinkIndex> route;

  bool operator==(const Flow&) const = default;
};

struct FrameBounds {
  std::int64_t min_bytes = 64;
  std::int64_t max_bytes = 1518;

  bool operator==(const FrameBounds&) const = default;
};

struct Instance {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Flow> flows;
  std::int64_t frame_overhead_bytes = 0;
  FrameBounds frame_bounds;

  bool operator==(const Instance&) const = default;

  std::optional<NodeIndex> find_node(std::string_view id) const {
    for (NodeIndex i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    return std::nullopt;
  }

  std::optional<LinkIndex> find_link(NodeIndex src, NodeIndex dst) const {
    for (LinkIndex i = 0; i < links.size(); ++i)
      if (links[i].src == src && links[i].dst == dst) return i;
    return std::nullopt;
  }

  bool is_switch(NodeIndex n) const { return nodes.at(n).kind == NodeKind::Switch; }

  // Egress ports that belong to switches (the only ports carrying GCLs).
  bool is_switch_port(LinkIndex l) const { return is_switch(links.at(l).src); }

  std::string link_name(LinkIndex l) const {
    return nodes.at(links.at(l).src).id + "->" + nodes.at(links.at(l).dst).id;
  }

  std::int64_t wire_bytes(const Flow& f) const { return f.payload_bytes + frame_overhead_bytes; }
};

struct AnalysisParams {
  microseconds delta_precision{0};
  int backlog = 1;
  microseconds processing_delay{0};
};

// ---------------------------------------------------------------------------
// Transmission times

/// Exact on-wire time of `bytes` on `link`, rounded up to whole nanoseconds.
inline nanoseconds transmission_time(std::int64_t bytes, const Link& link) {
  return nanoseconds{ceil_div(bytes * 8000, link.speed_mbps)};
}

/// Same quantity in real-valued microseconds (analysis side).
inline double transmission_us(std::int64_t bytes, const Link& link) {
  return static_cast<double>(bytes) * 8.0 / static_cast<double>(link.speed_mbps);
}

inline std::int64_t to_macroticks_ceil(nanoseconds t, const Link& link) {
  return ceil_div(t.count(), link.macrotick.count() * 1000);
}

// ---------------------------------------------------------------------------
// Port / queue helper quantities

struct QueueKey {
  LinkIndex link = 0;
  int queue = 0;

  auto operator<=>(const QueueKey&) const = default;
};

inline bool route_contains(const Flow& f, LinkIndex l) {
  return std::find(f.route.begin(), f.route.end(), l) != f.route.end();
}

/// LCM of the periods of every flow routed through the port.
inline microseconds hyperperiod_of_port(const Instance& inst, LinkIndex port) {
  std::int64_t h = 0;
  for (const auto& f : inst.flows) {
    if (!route_contains(f, port)) continue;
    h = h == 0 ? f.period.count() : checked_lcm(h, f.period.count());
  }
  if (h == 0) throw Error(ErrorCode::NoFlowsOnPort, "no flow routed through " + inst.link_name(port));
  return microseconds{h};
}

/// Largest frame (wire bytes) among the given flows; 0 when empty.
inline std::int64_t max_frame_size(const Instance& inst, std::span<const FlowIndex> flows) {
  std::int64_t m = 0;
  for (FlowIndex f : flows) m = std::max(m, inst.wire_bytes(inst.flows.at(f)));
  return m;
}

/// Longest transmission time among the given flows' frames on `link`.
inline nanoseconds guard_band(const Instance& inst, std::span<const FlowIndex> flows, const Link& link) {
  nanoseconds gb{0};
  for (FlowIndex f : flows) gb = std::max(gb, transmission_time(inst.wire_bytes(inst.flows.at(f)), link));
  return gb;
}

inline std::int64_t guard_band_macroticks(const Instance& inst, std::span<const FlowIndex> flows,
                                          const Link& link) {
  return to_macroticks_ceil(guard_band(inst, flows, link), link);
}

struct QueueFlows {
  std::vector<FlowIndex> all;          // flows assigned to the queue
  std::vector<FlowIndex> from_switch;  // subset whose previous hop is a switch
};

struct QueueFlowSets {
  std::map<QueueKey, QueueFlows> queues;

  std::size_t window_count() const { return queues.size(); }
};

/// Per (switch egress port, ST queue) flow sets; the queue index is the flow priority.
inline QueueFlowSets queue_flow_sets(const Instance& inst) {
  QueueFlowSets sets;
  for (FlowIndex fi = 0; fi < inst.flows.size(); ++fi) {
    const Flow& f = inst.flows[fi];
    for (std::size_t h = 0; h < f.route.size(); ++h) {
      const LinkIndex l = f.route[h];
      if (!inst.is_switch_port(l)) continue;
      auto& q = sets.queues[QueueKey{l, f.priority}];
      q.all.push_back(fi);
      if (h > 0 && inst.is_switch(inst.links.at(f.route[h - 1]).src)) q.from_switch.push_back(fi);
    }
  }
  return sets;
}

/// ST queues (priorities) used on each switch egress port.
inline std::map<LinkIndex, std::vector<int>> st_queues_by_port(const QueueFlowSets& sets) {
  std::map<LinkIndex, std::vector<int>> out;
  for (const auto& [key, _] : sets.queues) out[key.link].push_back(key.queue);
  return out;
}

/// LCM of all flow periods in the instance.
inline microseconds global_hyperperiod(const Instance& inst) {
  std::int64_t h = 1;
  for (const auto& f : inst.flows) h = checked_lcm(h, f.period.count());
  return microseconds{h};
}

// ---------------------------------------------------------------------------
// Structural validation

enum class IssueKind {
  DuplicateNodeId,
  DuplicateFlowId,
  UnknownNode,
  SelfLoop,
  DuplicateLink,
  MissingReverseLink,
  BadLinkParameter,
  EmptyRoute,
  DisconnectedRoute,
  RouteLoop,
  EndpointNotEndSystem,
  InteriorNotSwitch,
  FrameSizeOutOfRange,
  BadPeriod,
  BadDeadline,
  BadPriority,
};

constexpr std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::DuplicateNodeId: return "DuplicateNodeId";
    case IssueKind::DuplicateFlowId: return "DuplicateFlowId";
    case IssueKind::UnknownNode: return "UnknownNode";
    case IssueKind::SelfLoop: return "SelfLoop";
    case IssueKind::DuplicateLink: return "DuplicateLink";
    case IssueKind::MissingReverseLink: return "MissingReverseLink";
    case IssueKind::BadLinkParameter: return "BadLinkParameter";
    case IssueKind::EmptyRoute: return "EmptyRoute";
    case IssueKind::DisconnectedRoute: return "DisconnectedRoute";
    case IssueKind::RouteLoop: return "RouteLoop";
    case IssueKind::EndpointNotEndSystem: return "EndpointNotEndSystem";
    case IssueKind::InteriorNotSwitch: return "InteriorNotSwitch";
    case IssueKind::FrameSizeOutOfRange: return "FrameSizeOutOfRange";
    case IssueKind::BadPeriod: return "BadPeriod";
    case IssueKind::BadDeadline: return "BadDeadline";
    case IssueKind::BadPriority: return "BadPriority";
  }
  return "Unknown";
}

struct ValidationIssue {
  IssueKind kind;
  std::string subject;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(IssueKind k) const {
    return std::any_of(issues.begin(), issues.end(), [k](const auto& i) { return i.kind == k; });
  }
  std::string summary() const {
    std::string s;
    for (const auto& i : issues) {
      if (!s.empty()) s += "; ";
      s += std::string(to_string(i.kind)) + "(" + i.subject + "): " + i.detail;
    }
    return s;
  }
};

inline ValidationReport validate_instance(const Instance& inst) {
  ValidationReport rep;
  auto add = [&](IssueKind k, std::string subject, std::string detail) {
    rep.issues.push_back({k, std::move(subject), std::move(detail)});
  };

  std::set<std::string> seen;
  for (const auto& n : inst.nodes)
    if (!seen.insert(n.id).second) add(IssueKind::DuplicateNodeId, n.id, "node id appears twice");

  std::set<std::pair<NodeIndex, NodeIndex>> pairs;
  for (LinkIndex l = 0; l < inst.links.size(); ++l) {
    const Link& lk = inst.links[l];
    const std::string name = "link#" + std::to_string(l);
    if (lk.src >= inst.nodes.size() || lk.dst >= inst.nodes.size()) {
      add(IssueKind::UnknownNode, name, "endpoint index out of range");
      continue;
    }
    if (lk.src == lk.dst) add(IssueKind::SelfLoop, inst.link_name(l), "link connects a node to itself");
    if (!pairs.insert({lk.src, lk.dst}).second) add(IssueKind::DuplicateLink, inst.link_name(l), "repeated link");
    if (lk.speed_mbps <= 0 || lk.macrotick.count() < 1 || lk.propagation.count() != 0)
      add(IssueKind::BadLinkParameter, inst.link_name(l),
          "requires speed > 0, macrotick >= 1 us, propagation delay 0");
  }
  for (const auto& [a, b] : pairs)
    if (!pairs.count({b, a}))
      add(IssueKind::MissingReverseLink, inst.nodes[a].id + "->" + inst.nodes[b].id,
          "full-duplex link lacks its reverse direction");

  std::set<std::string> flow_ids;
  for (const auto& f : inst.flows) {
    if (!flow_ids.insert(f.id).second) add(IssueKind::DuplicateFlowId, f.id, "flow id appears twice");
    const std::int64_t wire = inst.wire_bytes(f);
    if (wire < inst.frame_bounds.min_bytes || wire > inst.frame_bounds.max_bytes)
      add(IssueKind::FrameSizeOutOfRange, f.id,
          std::to_string(wire) + " B outside [" + std::to_string(inst.frame_bounds.min_bytes) + ", " +
              std::to_string(inst.frame_bounds.max_bytes) + "]");
    if (f.period.count() <= 0) add(IssueKind::BadPeriod, f.id, "period must be positive");
    if (f.deadline.count() <= 0) add(IssueKind::BadDeadline, f.id, "deadline must be positive");
    if (f.priority < 0 || f.priority >= kQueuesPerPort) add(IssueKind::BadPriority, f.id, "priority outside 0..7");
    if (f.route.empty()) {
      add(IssueKind::EmptyRoute, f.id, "route has no links");
      continue;
    }
    bool indices_ok = true;
    for (LinkIndex l : f.route)
      if (l >= inst.links.size() || inst.links[l].src >= inst.nodes.size() ||
          inst.links[l].dst >= inst.nodes.size())
        indices_ok = false;
    if (!indices_ok) {
      add(IssueKind::UnknownNode, f.id, "route references an unknown link");
      continue;
    }
    std::set<NodeIndex> visited{inst.links[f.route.front()].src};
    for (std::size_t h = 0; h < f.route.size(); ++h) {
      const Link& lk = inst.links[f.route[h]];
      if (h > 0 && inst.links[f.route[h - 1]].dst != lk.src)
        add(IssueKind::DisconnectedRoute, f.id, "hop " + std::to_string(h) + " does not continue the path");
      if (!visited.insert(lk.dst).second) add(IssueKind::RouteLoop, f.id, "route revisits " + inst.nodes[lk.dst].id);
      if (h > 0 && !inst.is_switch(lk.src))
        add(IssueKind::InteriorNotSwitch, f.id, inst.nodes[lk.src].id + " forwards but is not a switch");
    }
    if (inst.is_switch(inst.links[f.route.front()].src) || inst.is_switch(inst.links[f.route.back()].dst))
      add(IssueKind::EndpointNotEndSystem, f.id, "route must start and end at end systems");
  }
  return rep;
}

}  // namespace tsngcl
