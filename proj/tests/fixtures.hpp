#pragma once

// Small hand-built instances shared by the unit tests and the acceptance runner.

#include <random>
#include <string>
#include <vector>

#include "tsngcl/tsngcl.hpp"

namespace fixtures {

using namespace tsngcl;

struct FlowSpec {
  std::string id;
  std::int64_t payload = 100;
  std::int64_t period = 1000;
  int priority = 7;
  std::vector<std::string> path;  // node ids, source to sink
  std::int64_t deadline = 0;      // 0 = period
};

/// Builds an instance from node ids ("SW..." are switches) with full-duplex links
/// between the given pairs.
inline Instance build(const std::vector<std::string>& nodes, const std::vector<std::pair<std::string, std::string>>& edges,
                      const std::vector<FlowSpec>& flows, std::int64_t speed = 100, std::int64_t macrotick = 1) {
  Instance inst;
  for (const auto& n : nodes) inst.nodes.push_back({n, n.rfind("SW", 0) == 0 ? NodeKind::Switch : NodeKind::EndSystem});
  for (const auto& [a, b] : edges) {
    const NodeIndex x = *inst.find_node(a), y = *inst.find_node(b);
    inst.links.push_back({x, y, speed, microseconds{macrotick}, microseconds{0}});
    inst.links.push_back({y, x, speed, microseconds{macrotick}, microseconds{0}});
  }
  for (const auto& fs : flows) {
    Flow f;
    f.id = fs.id;
    f.payload_bytes = fs.payload;
    f.period = microseconds{fs.period};
    f.deadline = microseconds{fs.deadline ? fs.deadline : fs.period};
    f.priority = fs.priority;
    for (std::size_t h = 0; h + 1 < fs.path.size(); ++h)
      f.route.push_back(*inst.find_link(*inst.find_node(fs.path[h]), *inst.find_node(fs.path[h + 1])));
    inst.flows.push_back(std::move(f));
  }
  return inst;
}

/// ES0 - SW0 - ... - SW(n-1) - ES1 with the given flows all going ES0 -> ES1.
inline Instance chain(std::size_t switches, const std::vector<FlowSpec>& flows, std::int64_t macrotick = 1) {
  std::vector<std::string> nodes{"ES0", "ES1"};
  std::vector<std::string> path{"ES0"};
  for (std::size_t i = 0; i < switches; ++i) {
    nodes.push_back("SW" + std::to_string(i));
    path.push_back("SW" + std::to_string(i));
  }
  path.push_back("ES1");
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t h = 0; h + 1 < path.size(); ++h) edges.push_back({path[h], path[h + 1]});
  std::vector<FlowSpec> fl = flows;
  for (auto& f : fl)
    if (f.path.empty()) f.path = path;
  return build(nodes, edges, fl, 100, macrotick);
}

/// Two flows from separate end systems merging at SW1 and sharing SW1 -> SW2 -> ES3:
/// 1000 B every 3000 us each, deadline = period, 100 us macroticks.
inline Instance merge_example() {
  return build({"SW1", "SW2", "ES1", "ES2", "ES3"}, {{"ES1", "SW1"}, {"ES2", "SW1"}, {"SW1", "SW2"}, {"SW2", "ES3"}},
               {{"f1", 1000, 3000, 7, {"ES1", "SW1", "SW2", "ES3"}}, {"f2", 1000, 3000, 7, {"ES2", "SW1", "SW2", "ES3"}}},
               100, 100);
}

/// Two to three flows over a small two-switch Y topology, drawn from `seed`.
inline Instance small_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::int64_t> periods{500, 1000, 2000};
  const std::vector<std::vector<std::string>> paths{
      {"ES0", "SW0", "SW1", "ES2"}, {"ES1", "SW0", "SW1", "ES2"}, {"ES0", "SW0", "ES1"}, {"ES2", "SW1", "SW0", "ES0"}};
  std::vector<FlowSpec> flows;
  const int n = 2 + static_cast<int>(rng() % 2);
  for (int i = 0; i < n; ++i)
    flows.push_back({"f" + std::to_string(i), 64 + static_cast<std::int64_t>(rng() % 1000), periods[rng() % periods.size()],
                     static_cast<int>(6 + rng() % 2), paths[rng() % paths.size()]});
  return build({"SW0", "SW1", "ES0", "ES1", "ES2"}, {{"ES0", "SW0"}, {"ES1", "SW0"}, {"SW0", "SW1"}, {"SW1", "ES2"}}, flows);
}

/// Shapes of the fifteen desk-scale generated cases (topology, switches, end systems, flows).
struct SuiteShape {
  TopologyKind topology;
  std::size_t switches, end_systems, flows;
};

inline const std::vector<SuiteShape>& suite_shapes() {
  static const std::vector<SuiteShape> shapes{
      {TopologyKind::SRM, 2, 3, 9},   {TopologyKind::SRM, 3, 3, 11}, {TopologyKind::SRM, 3, 4, 15},
      {TopologyKind::MR, 4, 6, 15},   {TopologyKind::MR, 4, 8, 21},  {TopologyKind::MR, 5, 11, 27},
      {TopologyKind::MM, 4, 5, 13},   {TopologyKind::MM, 6, 12, 30}, {TopologyKind::MM, 7, 13, 35},
      {TopologyKind::ST, 3, 4, 7},    {TopologyKind::ST, 3, 6, 12},  {TopologyKind::ST, 3, 7, 16},
      {TopologyKind::MT, 7, 8, 18},   {TopologyKind::MT, 7, 8, 25},  {TopologyKind::MT, 7, 12, 32},
  };
  return shapes;
}

inline Instance suite_instance(std::size_t i) {
  const auto& s = suite_shapes().at(i);
  GenSpec g;
  g.topology = s.topology;
  g.switches = s.switches;
  g.end_systems = s.end_systems;
  g.flows = s.flows;
  g.seed = i + 1;
  return generate(g);
}

}  // namespace fixtures
