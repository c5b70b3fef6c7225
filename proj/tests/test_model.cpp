#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace tsngcl;
using fixtures::build;
using fixtures::chain;

namespace {

Instance fan_in() {
  // f1, f2 enter SW0 from end systems, f3 comes from SW1; all leave SW0 -> ES9.
  return build({"SW0", "SW1", "ES1", "ES2", "ES3", "ES9"},
               {{"ES1", "SW0"}, {"ES2", "SW0"}, {"ES3", "SW1"}, {"SW1", "SW0"}, {"SW0", "ES9"}},
               {{"f1", 50, 5, 7, {"ES1", "SW0", "ES9"}},
                {"f2", 60, 6, 7, {"ES2", "SW0", "ES9"}},
                {"f3", 100, 15, 7, {"ES3", "SW1", "SW0", "ES9"}}});
}

}  // namespace

TEST(Hyperperiod, LcmOfRoutedPeriods) {
  const Instance inst = fan_in();
  const LinkIndex out = *inst.find_link(*inst.find_node("SW0"), *inst.find_node("ES9"));
  EXPECT_EQ(hyperperiod_of_port(inst, out), microseconds{30});
}

TEST(Hyperperiod, SingleAndCoprimePeriods) {
  EXPECT_EQ(hyperperiod_of_port(chain(1, {{"a", 100, 10}}), 0), microseconds{10});
  const Instance two = chain(1, {{"a", 100, 1500}, {"b", 100, 2500}});
  EXPECT_EQ(hyperperiod_of_port(two, two.flows[0].route[1]), microseconds{7500});
}

TEST(Hyperperiod, UnusedPortIsAnError) {
  const Instance inst = chain(1, {{"a", 100, 10}});
  const LinkIndex back = *inst.find_link(*inst.find_node("ES1"), *inst.find_node("SW0"));
  try {
    hyperperiod_of_port(inst, back);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFlowsOnPort);
  }
}

TEST(Hyperperiod, DivisibleByEveryRoutedPeriod) {
  std::mt19937_64 rng(7);
  const std::vector<std::int64_t> pool{2, 3, 5, 7, 10, 12, 15, 40};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<fixtures::FlowSpec> fl;
    for (int k = 0; k < 4; ++k) fl.push_back({"f" + std::to_string(k), 64, pool[rng() % pool.size()]});
    const Instance inst = chain(2, fl);
    const auto k = hyperperiod_of_port(inst, inst.flows[0].route[1]).count();
    for (const auto& f : inst.flows) EXPECT_EQ(k % f.period.count(), 0);
  }
}

TEST(GuardBand, LongestFrameOnTheLink) {
  const Instance inst = chain(1, {{"a", 150, 1000}, {"b", 100, 1000}});
  const Link& link = inst.links[inst.flows[0].route[1]];
  const std::vector<FlowIndex> one{0}, both{0, 1}, none{};
  EXPECT_EQ(guard_band(inst, one, link), nanoseconds{12000});
  EXPECT_EQ(guard_band(inst, both, link), nanoseconds{12000});
  EXPECT_EQ(guard_band(inst, none, link), nanoseconds{0});
  EXPECT_EQ(guard_band_macroticks(inst, both, link), 12);
}

TEST(GuardBand, MatchesBruteForceMaximum) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<fixtures::FlowSpec> fl;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) fl.push_back({"f" + std::to_string(k), 64 + static_cast<std::int64_t>(rng() % 1455), 1000});
    const Instance inst = chain(1, fl);
    const Link& link = inst.links[inst.flows[0].route[1]];
    std::vector<FlowIndex> all(inst.flows.size());
    std::iota(all.begin(), all.end(), FlowIndex{0});
    std::int64_t best_ns = 0;
    for (const auto& f : fl) best_ns = std::max(best_ns, (f.payload * 8 * 1000 + 99) / 100);
    EXPECT_EQ(guard_band(inst, all, link).count(), best_ns);
  }
}

TEST(MaxFrameSize, LargestPayload) {
  const Instance inst = chain(1, {{"a", 150, 1000}, {"b", 100, 1000}, {"c", 64, 1000}});
  const std::vector<FlowIndex> ab{0, 1}, none{}, c{2};
  EXPECT_EQ(max_frame_size(inst, ab), 150);
  EXPECT_EQ(max_frame_size(inst, none), 0);
  EXPECT_EQ(max_frame_size(inst, c), 64);
}

TEST(QueueFlowSets, SwitchArrivalsAreTracked) {
  const Instance inst = fan_in();
  const auto sets = queue_flow_sets(inst);
  const LinkIndex out = *inst.find_link(*inst.find_node("SW0"), *inst.find_node("ES9"));
  const auto& q = sets.queues.at(QueueKey{out, 7});
  EXPECT_EQ(q.all, (std::vector<FlowIndex>{0, 1, 2}));
  EXPECT_EQ(q.from_switch, (std::vector<FlowIndex>{2}));

  // f3's first switch port: reached from an end system, so not a switch arrival.
  const LinkIndex sw1 = *inst.find_link(*inst.find_node("SW1"), *inst.find_node("SW0"));
  EXPECT_EQ(sets.queues.at(QueueKey{sw1, 7}).all, (std::vector<FlowIndex>{2}));
  EXPECT_TRUE(sets.queues.at(QueueKey{sw1, 7}).from_switch.empty());
  EXPECT_EQ(sets.window_count(), 2u);
}

TEST(QueueFlowSets, EndSystemPortsCarryNoQueues) {
  const Instance inst = chain(2, {{"a", 100, 1000}});
  const auto sets = queue_flow_sets(inst);
  for (const auto& [key, _] : sets.queues) EXPECT_TRUE(inst.is_switch_port(key.link));
  EXPECT_EQ(sets.queues.size(), 2u);
  const auto& second = sets.queues.at(QueueKey{inst.flows[0].route[2], 7});
  EXPECT_EQ(second.from_switch, (std::vector<FlowIndex>{0}));
}

TEST(Validation, WellFormedInstanceIsClean) {
  const auto rep = validate_instance(chain(2, {{"a", 100, 1000}, {"b", 200, 2000, 6}}));
  EXPECT_TRUE(rep.ok()) << rep.summary();
}

TEST(Validation, RouteWithGap) {
  Instance inst = chain(2, {{"a", 100, 1000}});
  inst.flows[0].route.erase(inst.flows[0].route.begin() + 1);
  const auto rep = validate_instance(inst);
  EXPECT_TRUE(rep.has(IssueKind::DisconnectedRoute));
}

TEST(Validation, OversizedFrame) {
  const auto rep = validate_instance(chain(1, {{"a", 20000, 1000}}));
  EXPECT_TRUE(rep.has(IssueKind::FrameSizeOutOfRange));
}

TEST(Validation, InteriorNodesMustBeSwitches) {
  Instance inst = build({"ES0", "ES1", "ES2", "SW0"}, {{"ES0", "SW0"}, {"SW0", "ES1"}, {"ES1", "ES2"}},
                        {{"a", 100, 1000, 7, {"ES0", "SW0", "ES1", "ES2"}}});
  const auto rep = validate_instance(inst);
  EXPECT_TRUE(rep.has(IssueKind::InteriorNotSwitch));
}

TEST(Validation, OtherStructuralIssues) {
  Instance inst = chain(1, {{"a", 100, 1000}, {"a", 100, 0, 9}});
  inst.links.pop_back();
  const auto rep = validate_instance(inst);
  EXPECT_TRUE(rep.has(IssueKind::DuplicateFlowId));
  EXPECT_TRUE(rep.has(IssueKind::BadPeriod));
  EXPECT_TRUE(rep.has(IssueKind::BadPriority));
  EXPECT_TRUE(rep.has(IssueKind::MissingReverseLink));
}

TEST(Validation, ConsecutiveHopsMeetAtSwitches) {
  for (std::size_t i = 0; i < fixtures::suite_shapes().size(); ++i) {
    const Instance inst = fixtures::suite_instance(i);
    for (const auto& f : inst.flows)
      for (std::size_t h = 0; h + 1 < f.route.size(); ++h) {
        EXPECT_EQ(inst.links[f.route[h]].dst, inst.links[f.route[h + 1]].src);
        EXPECT_TRUE(inst.is_switch(inst.links[f.route[h]].dst));
      }
  }
}

TEST(TransmissionTime, RoundsUpToNanoseconds) {
  Link l;
  l.speed_mbps = 100;
  EXPECT_EQ(transmission_time(150, l), nanoseconds{12000});
  l.speed_mbps = 1000;
  EXPECT_EQ(transmission_time(1, l), nanoseconds{8});
  l.speed_mbps = 3;
  EXPECT_EQ(transmission_time(1, l), nanoseconds{2667});
  l.macrotick = microseconds{5};
  EXPECT_EQ(to_macroticks_ceil(nanoseconds{5001}, l), 2);
  EXPECT_EQ(to_macroticks_ceil(nanoseconds{5000}, l), 1);
}

TEST(InstanceFile, RoundTripIsLossless) {
  const Instance inst = fixtures::suite_instance(0);
  const json j = instance_to_json(inst);
  EXPECT_EQ(instance_from_json(j), inst);
  EXPECT_EQ(instance_from_json(parse_json_text(dump_json(j), "mem")), inst);
}

TEST(InstanceFile, MalformedRouteIsAParseError) {
  json j = instance_to_json(chain(1, {{"a", 100, 1000}}));
  j["flows"][0]["route"] = {"ES0", "ES1"};
  try {
    instance_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  j["flows"][0]["route"] = "ES0";
  EXPECT_THROW(instance_from_json(j), Error);
  j["flows"][0].erase("route");
  EXPECT_THROW(instance_from_json(j), Error);
}

TEST(InstanceFile, BadJsonAndMissingFile) {
  try {
    parse_json_text("{ nope", "x.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  try {
    load_instance("/nonexistent/instance.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FileNotFound);
  }
}

TEST(Numeric, Helpers) {
  EXPECT_EQ(divisors(30), (std::vector<std::int64_t>{1, 2, 3, 5, 6, 10, 15, 30}));
  EXPECT_EQ(divisors(1), (std::vector<std::int64_t>{1}));
  EXPECT_EQ(ceil_div(7, 2), 4);
  EXPECT_EQ(ceil_div(-7, 2), -3);
  EXPECT_EQ(checked_lcm(1500, 2500), 7500);
  EXPECT_THROW(checked_lcm(std::int64_t{1} << 62, 3), Error);
  EXPECT_DOUBLE_EQ(ceil_to_step(10.0000000001, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(ceil_to_step(10.2, 5.0), 15.0);
}
