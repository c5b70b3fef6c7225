#pragma once

// Synthetic instances: switch topologies (rings, meshes, trees) with end
// systems attached round-robin, random unicast flows on shortest paths.

#include <deque>
#include <random>
#include <string>
#include <vector>

#include "tsngcl/model.hpp"

namespace tsngcl {

enum class TopologyKind { SRM, MR, MM, ST, MT };

inline std::string_view to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::SRM: return "srm";
    case TopologyKind::MR: return "mr";
    case TopologyKind::MM: return "mm";
    case TopologyKind::ST: return "st";
    case TopologyKind::MT: return "mt";
  }
  return "?";
}

inline TopologyKind parse_topology(std::string_view s) {
  for (auto k : {TopologyKind::SRM, TopologyKind::MR, TopologyKind::MM, TopologyKind::ST, TopologyKind::MT})
    if (s == to_string(k)) return k;
  if (s == "st1") return TopologyKind::ST;
  if (s == "mt2") return TopologyKind::MT;
  throw Error(ErrorCode::Usage, "unknown topology '" + std::string(s) + "' (srm, mr, mm, st, mt)");
}

struct GenSpec {
  TopologyKind topology = TopologyKind::SRM;
  std::size_t switches = 2;
  std::size_t end_systems = 3;
  std::size_t flows = 9;
  std::uint64_t seed = 1;
  std::int64_t speed_mbps = 100;
  std::int64_t macrotick_us = 1;
  std::vector<std::int64_t> periods{1500, 2500, 3500, 5000, 7500, 10000};
  std::vector<int> priorities{7, 6};
  std::int64_t min_payload = 64;
  std::int64_t max_payload = 1518;
};

namespace detail {

inline std::size_t min_switches(TopologyKind k) {
  switch (k) {
    case TopologyKind::SRM: return 2;
    case TopologyKind::MR: return 3;
    case TopologyKind::MM: return 4;
    case TopologyKind::ST: return 2;
    case TopologyKind::MT: return 3;
  }
  return 1;
}

/// Undirected switch edges for each topology kind; switches are 0..n-1.
inline std::vector<std::pair<std::size_t, std::size_t>> switch_edges(TopologyKind k, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  auto ring = [&] {
    for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
    if (n > 2) e.push_back({n - 1, 0});
  };
  switch (k) {
    case TopologyKind::SRM:
      ring();
      if (n >= 4)
        for (std::size_t i = 0; i + 2 < n; i += 2) e.push_back({i, i + 2});
      break;
    case TopologyKind::MR: ring(); break;
    case TopologyKind::MM:
      ring();
      for (std::size_t i = 0; i < n / 2; ++i)
        if (i + n / 2 < n && n / 2 > 1) e.push_back({i, i + n / 2});
      break;
    case TopologyKind::ST:
      for (std::size_t i = 1; i < n; ++i) e.push_back({0, i});
      break;
    case TopologyKind::MT: {
      // Root, two children, remaining switches as grandchildren alternating parents.
      const std::size_t kids = std::min<std::size_t>(2, n - 1);
      for (std::size_t i = 1; i <= kids; ++i) e.push_back({0, i});
      for (std::size_t i = kids + 1; i < n; ++i) e.push_back({1 + (i - kids - 1) % kids, i});
      break;
    }
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

}  // namespace detail

/// Shortest path between two end systems through switches; ties go to the lowest node index.
inline std::vector<LinkIndex> shortest_route(const Instance& inst, NodeIndex src, NodeIndex dst) {
  std::vector<std::vector<std::pair<NodeIndex, LinkIndex>>> adj(inst.nodes.size());
  for (LinkIndex l = 0; l < inst.links.size(); ++l) adj[inst.links[l].src].push_back({inst.links[l].dst, l});
  for (auto& a : adj) std::sort(a.begin(), a.end());
  std::vector<std::optional<LinkIndex>> via(inst.nodes.size());
  std::vector<bool> seen(inst.nodes.size(), false);
  std::deque<NodeIndex> q{src};
  seen[src] = true;
  while (!q.empty()) {
    const NodeIndex n = q.front();
    q.pop_front();
    if (n == dst) break;
    if (n != src && !inst.is_switch(n)) continue;
    for (const auto& [m, l] : adj[n])
      if (!seen[m]) {
        seen[m] = true;
        via[m] = l;
        q.push_back(m);
      }
  }
  if (!seen[dst]) throw Error(ErrorCode::ConfigError, "no path " + inst.nodes[src].id + " -> " + inst.nodes[dst].id);
  std::vector<LinkIndex> route;
  for (NodeIndex n = dst; n != src; n = inst.links[*via[n]].src) route.push_back(*via[n]);
  std::reverse(route.begin(), route.end());
  return route;
}

inline Instance generate(const GenSpec& spec) {
  if (spec.switches < detail::min_switches(spec.topology) || spec.end_systems < 2)
    throw Error(ErrorCode::TopologyTooSmall, std::string(to_string(spec.topology)) + " needs at least " +
                                                 std::to_string(detail::min_switches(spec.topology)) +
                                                 " switches and 2 end systems");
  if (spec.flows < 1 || spec.periods.empty() || spec.priorities.empty())
    throw Error(ErrorCode::ConfigError, "generator needs flows, periods and priorities");

  Instance inst;
  for (std::size_t i = 0; i < spec.switches; ++i) inst.nodes.push_back({"SW" + std::to_string(i), NodeKind::Switch});
  for (std::size_t i = 0; i < spec.end_systems; ++i) inst.nodes.push_back({"ES" + std::to_string(i), NodeKind::EndSystem});
  auto connect = [&](NodeIndex a, NodeIndex b) {
    inst.links.push_back({a, b, spec.speed_mbps, microseconds{spec.macrotick_us}, microseconds{0}});
    inst.links.push_back({b, a, spec.speed_mbps, microseconds{spec.macrotick_us}, microseconds{0}});
  };
  const auto edges = detail::switch_edges(spec.topology, spec.switches);
  for (const auto& [a, b] : edges) connect(a, b);

  // End systems go round-robin to attachment switches (leaves for trees).
  std::vector<std::size_t> attach;
  if (spec.topology == TopologyKind::ST || spec.topology == TopologyKind::MT) {
    std::vector<std::size_t> degree(spec.switches, 0);
    for (const auto& [a, b] : edges) {
      ++degree[a];
      ++degree[b];
    }
    for (std::size_t i = 1; i < spec.switches; ++i)
      if (degree[i] == 1) attach.push_back(i);
  }
  if (attach.empty())
    for (std::size_t i = 0; i < spec.switches; ++i) attach.push_back(i);
  for (std::size_t e = 0; e < spec.end_systems; ++e) connect(spec.switches + e, attach[e % attach.size()]);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_es(0, spec.end_systems - 1);
  std::uniform_int_distribution<std::int64_t> pick_size(spec.min_payload, spec.max_payload);
  std::uniform_int_distribution<std::size_t> pick_period(0, spec.periods.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_prio(0, spec.priorities.size() - 1);
  for (std::size_t i = 0; i < spec.flows; ++i) {
    const std::size_t a = pick_es(rng);
    std::size_t b = pick_es(rng);
    while (b == a) b = pick_es(rng);
    Flow f;
    f.id = "f" + std::to_string(i);
    f.payload_bytes = pick_size(rng);
    f.period = microseconds{spec.periods[pick_period(rng)]};
    f.deadline = f.period;
    f.priority = spec.priorities[pick_prio(rng)];
    f.route = shortest_route(inst, spec.switches + a, spec.switches + b);
    inst.flows.push_back(std::move(f));
  }
  return inst;
}

}  // namespace tsngcl
