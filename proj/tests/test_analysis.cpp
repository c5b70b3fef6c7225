#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "fixtures.hpp"

using namespace tsngcl;

namespace {

Link fast_ethernet() {
  Link l;
  l.speed_mbps = 100;
  l.macrotick = microseconds{1};
  return l;
}

// Worst delay by scanning t on a grid: smallest d with beta(t + d) >= alpha(t),
// found by bisection on the nondecreasing service curve.
double grid_delay(const std::function<double(double)>& alpha, const std::function<double(double)>& beta, double horizon,
                  double step) {
  double worst = 0.0;
  for (double t = 0.0; t <= horizon; t += step) {
    const double a = alpha(t);
    double lo = t, hi = t + 1.0;
    while (beta(hi) < a) hi = t + 2.0 * (hi - t);
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (beta(mid) >= a ? hi : lo) = mid;
    }
    worst = std::max(worst, hi - t);
  }
  return worst;
}

Schedule uniform_windows(const Instance& inst, WindowConfig w) {
  Schedule s;
  for (const auto& [key, _] : queue_flow_sets(inst).queues) s.windows[key] = {w};
  return s;
}

}  // namespace

TEST(ArrivalCurve, TokenBucketOfOneFlow) {
  const Instance inst = fixtures::chain(1, {{"a", 100, 10}});
  const auto c = flow_arrival_curve(inst, inst.flows[0]);
  EXPECT_DOUBLE_EQ(c.at(0.0), 100.0);
  EXPECT_DOUBLE_EQ(c.at(10.0), 200.0);
  EXPECT_TRUE(c.nondecreasing());
  EXPECT_TRUE(c.concave());
  const auto twice = c + c;
  for (double t : {0.0, 3.0, 10.0, 55.5}) EXPECT_DOUBLE_EQ(twice.at(t), 2.0 * c.at(t));
}

TEST(ArrivalCurve, AggregationCommutesAndAssociates) {
  const auto a = CumulativeCurve::token_bucket(100, 3);
  const auto b = CumulativeCurve::rate_latency(5, 4);
  const auto c = CumulativeCurve::token_bucket(20, 1);
  for (double t : {0.0, 1.0, 4.0, 9.5, 100.0}) {
    EXPECT_DOUBLE_EQ((a + b).at(t), (b + a).at(t));
    EXPECT_DOUBLE_EQ(((a + b) + c).at(t), (a + (b + c)).at(t));
  }
}

TEST(ServiceCurve, TdmaRateAndLatency) {
  const WindowConfig w{0, 4, 10};
  const std::vector<WindowConfig> ws{w};
  const auto s = tdma_service(ws, fast_ethernet(), 1);
  EXPECT_DOUBLE_EQ(s.rate, 0.3 * 12.5);
  EXPECT_DOUBLE_EQ(s.latency, 7.0);
  const auto curve = window_service_curve(w, fast_ethernet(), 1);
  EXPECT_DOUBLE_EQ(curve.at(7.0), 0.0);
  EXPECT_DOUBLE_EQ(curve.at(17.0), 37.5);
}

TEST(ServiceCurve, AlwaysOpenAndHalving) {
  const std::vector<WindowConfig> open{{0, 10, 10}};
  const auto full = tdma_service(open, fast_ethernet(), 0);
  EXPECT_DOUBLE_EQ(full.rate, 12.5);
  EXPECT_DOUBLE_EQ(full.latency, 0.0);
  const std::vector<WindowConfig> a{{0, 4, 10}}, b{{0, 2, 5}};
  const auto sa = tdma_service(a, fast_ethernet(), 0), sb = tdma_service(b, fast_ethernet(), 0);
  EXPECT_DOUBLE_EQ(sa.rate, sb.rate);
  EXPECT_DOUBLE_EQ(sb.latency, sa.latency / 2.0);
}

TEST(ServiceCurve, WorstPhaseGateSimulationStaysAbove) {
  // Bytes a backlogged queue gets through (0,4,10) with a 1 us guard band, from every start phase.
  const std::vector<WindowConfig> ws{{0, 4, 10}};
  const auto s = tdma_service(ws, fast_ethernet(), 1);
  // Time runs in 10 ns steps so the phase grid does not drift.
  for (std::int64_t phase = 0; phase < 1000; phase += 10) {
    std::int64_t steps_served = 0;
    for (std::int64_t n = 0; n < 20000; ++n) {
      if ((phase + n) % 1000 < 300) ++steps_served;  // usable part of the opening
      const double served = 12.5 * 0.01 * static_cast<double>(steps_served);
      const double elapsed = static_cast<double>(n + 1) * 0.01;
      EXPECT_GE(served + 1e-6, s.rate * std::max(0.0, elapsed - s.latency) - 12.5 * 0.01) << phase << ' ' << n;
    }
  }
}

TEST(ServiceCurve, TooSmallWindow) {
  try {
    window_service_curve({0, 4, 10}, fast_ethernet(), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WindowTooSmall);
  }
}

TEST(HopDelay, HorizontalDeviationExample) {
  const TokenBucket a{100, 10};
  const RateLatency s{20, 5};
  EXPECT_DOUBLE_EQ(horizontal_deviation(a, s), 10.0);
  EXPECT_DOUBLE_EQ(horizontal_deviation(a.curve(), s.curve()), 10.0);
  const double oracle = grid_delay([&](double t) { return a.burst + a.rate * t; },
                                   [&](double t) { return s.rate * std::max(0.0, t - s.latency); }, 50.0, 0.01);
  EXPECT_NEAR(oracle, 10.0, 1e-6);
  EXPECT_DOUBLE_EQ(horizontal_deviation(TokenBucket{0, 10}, RateLatency{20, 0}), 0.0);
  EXPECT_DOUBLE_EQ(horizontal_deviation(TokenBucket{200, 10}, s) - s.latency, 2.0 * (10.0 - s.latency));
}

TEST(HopDelay, IncludesFrameAndRoundsToMacrotick) {
  Link l = fast_ethernet();
  l.macrotick = microseconds{4};
  const double h = hop_delay_bound(TokenBucket{100, 10}.curve(), RateLatency{20, 5}.curve(), 125, l);
  EXPECT_DOUBLE_EQ(h, 20.0);  // 10 + 10 us frame, already on the grid
  EXPECT_DOUBLE_EQ(hop_delay_bound(TokenBucket{100, 10}.curve(), RateLatency{20, 5}.curve(), 130, l), 24.0);
}

TEST(HopDelay, OverloadIsUnstable) {
  try {
    horizontal_deviation(TokenBucket{100, 30}, RateLatency{20, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableQueue);
  }
  EXPECT_THROW(deconvolve(TokenBucket{100, 30}, RateLatency{20, 5}), Error);
}

TEST(OutputCurve, DeconvolutionInflatesBurst) {
  const auto out = deconvolve(TokenBucket{100, 10}, RateLatency{20, 5});
  EXPECT_DOUBLE_EQ(out.burst, 150.0);
  EXPECT_DOUBLE_EQ(out.rate, 10.0);
  const auto same = deconvolve(TokenBucket{100, 10}, RateLatency{20, 0});
  EXPECT_DOUBLE_EQ(same.burst, 100.0);

  // Curve form against a direct sup over u of alpha(t + u) - beta(u).
  const auto curve = output_arrival_curve(TokenBucket{100, 10}.curve(), RateLatency{20, 5}.curve());
  for (double t = 0.0; t < 40.0; t += 0.5) {
    double sup = 0.0;
    for (double u = 0.0; u < 100.0; u += 0.01) sup = std::max(sup, 100 + 10 * (t + u) - 20 * std::max(0.0, u - 5));
    EXPECT_NEAR(curve.at(t), sup, 1e-6);
    const auto input = TokenBucket{100, 10}.curve();
    EXPECT_GE(curve.at(t), input.at(t));
  }
  EXPECT_LE(curve.final_slope(), 10.0);
}

TEST(ShapedDelay, RateLatencyKneeBound) {
  // Line shaping only helps: the capped bound never exceeds the plain token bucket bound.
  const std::vector<ShapedArrival> in{{300, 1, 100, 12.5}, {200, 2, 100, 12.5}};
  const RateLatency s{6, 10};
  const double capped = shaped_delay(in, s);
  EXPECT_LE(capped, s.latency + 500.0 / 6.0 + 1e-9);
  const double oracle = grid_delay(
      [&](double t) {
        double a = 0.0;
        for (const auto& f : in) a += std::min(f.frame + f.line_rate * t, f.burst + f.rate * t);
        return a;
      },
      [&](double t) { return s.rate * std::max(0.0, t - s.latency); }, 200.0, 0.01);
    // The grid can step over the knee, so it may only fall short by about one step.
  EXPECT_GE(capped + 1e-9, oracle);
  EXPECT_NEAR(capped, oracle, 0.01);
}

TEST(ShapedDelay, StaircaseMatchesGridOnRandomQueues) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 60) {
    PeriodicSlot slot;
    slot.period = 10.0 + std::floor(u(rng) * 30.0);
    slot.slot = std::max(1.0, std::floor(slot.period * (0.34 + 0.66 * u(rng))));
    slot.rate = 12.5;
    std::vector<ShapedArrival> in;
    const int n = 1 + static_cast<int>(rng() % 3);
    double rate_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      ShapedArrival f;
      f.frame = 64.0 + std::floor(u(rng) * 236.0);
      f.rate = f.frame / (200.0 + std::floor(u(rng) * 800.0));
      f.burst = f.frame + f.rate * std::floor(u(rng) * 200.0);
      f.line_rate = 12.5;
      rate_sum += f.rate;
      in.push_back(f);
    }
    if (rate_sum * slot.period > slot.slot * slot.rate) continue;
    auto alpha = [&](double t) {
      double a = 0.0;
      for (const auto& f : in) a += std::min(f.frame + f.line_rate * t, f.burst + f.rate * t);
      return a;
    };
    auto beta = [&](double t) {
      const double k = std::floor(t / slot.period);
      return slot.rate * (k * slot.slot + std::max(0.0, t - k * slot.period - (slot.period - slot.slot)));
    };
    const double bound = shaped_delay(in, slot);
    const double horizon = slot.period * (alpha(0.0) / (slot.slot * slot.rate) + 4.0) + 50.0;
    const double oracle = grid_delay(alpha, beta, horizon, 0.005);
    EXPECT_GE(bound + 1e-6, oracle);
    EXPECT_NEAR(bound, oracle, 0.2);
    // The staircase sits above its rate-latency envelope, so its bound is never worse.
    EXPECT_LE(bound, shaped_delay(in, RateLatency{slot.rate * slot.slot / slot.period, slot.period - slot.slot}) + 1e-9);
    ++checked;
  }
}

TEST(ShapedDelay, OverloadedSlotIsInfinite) {
  const std::vector<ShapedArrival> in{{100, 10, 100, 12.5}};
  EXPECT_TRUE(std::isinf(shaped_delay(in, PeriodicSlot{10, 4, 12.5})));
  EXPECT_TRUE(std::isinf(shaped_delay(in, PeriodicSlot{10, 0, 12.5})));
}

TEST(FlowWcd, UncontendedAlwaysOpenPath) {
  // 125 B is 10 us on 100 Mbps: one transmission at the source, one at the switch.
  const Instance inst = fixtures::chain(1, {{"a", 125, 1000}});
  const auto s = uniform_windows(inst, {0, 1000, 1000});
  const auto d = flow_wcd(inst, 0, s, AnalysisParams{});
  EXPECT_DOUBLE_EQ(d.wcd_us, 20.0);
  EXPECT_TRUE(d.schedulable);
  EXPECT_EQ(d.per_hop_us.size(), 2u);

  AnalysisParams p;
  p.delta_precision = microseconds{3};
  p.processing_delay = microseconds{2};
  EXPECT_DOUBLE_EQ(flow_wcd(inst, 0, s, p).wcd_us, 25.0);
}

TEST(FlowWcd, FrameLongerThanTheWindow) {
  // 150 B needs 12 us; a 4 us window has no time left after the guard band.
  const Instance inst = fixtures::chain(1, {{"a", 150, 1000}});
  const auto d = flow_wcd(inst, 0, uniform_windows(inst, {0, 4, 100}), AnalysisParams{});
  EXPECT_TRUE(d.unstable);
  EXPECT_FALSE(d.schedulable);
}

TEST(FlowWcd, DeadlineDecidesSchedulability) {
  Instance inst = fixtures::chain(1, {{"a", 125, 1000}});
  const auto s = uniform_windows(inst, {0, 1000, 1000});
  inst.flows[0].deadline = microseconds{20};
  EXPECT_TRUE(flow_wcd(inst, 0, s, AnalysisParams{}).schedulable);
  inst.flows[0].deadline = microseconds{19};
  EXPECT_FALSE(flow_wcd(inst, 0, s, AnalysisParams{}).schedulable);
}

TEST(FlowWcd, MissingWindowIsAConfigError) {
  const Instance inst = fixtures::chain(1, {{"a", 125, 1000}});
  try {
    flow_wcd(inst, 0, Schedule{}, AnalysisParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(FlowWcd, OverlappingQueuesAreRefused) {
  // Two priorities sharing a port with overlapping gates would interfere, which the bound does not cover.
  const Instance inst = fixtures::chain(1, {{"a", 125, 1000, 7}, {"b", 125, 1000, 6}});
  const LinkIndex port = inst.flows[0].route[1];
  Schedule s;
  s.windows[QueueKey{port, 7}] = {{0, 500, 1000}};
  s.windows[QueueKey{port, 6}] = {{499, 500, 1000}};
  try {
    TdmaAnalyzer{}.analyze(inst, s, AnalysisParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationFailed);
  }
  s.windows[QueueKey{port, 6}] = {{500, 500, 1000}};
  EXPECT_TRUE(TdmaAnalyzer{}.analyze(inst, s, AnalysisParams{}).all_schedulable());
}

TEST(FlowWcd, WiderWindowsNeverHurt) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<fixtures::FlowSpec> fl;
    for (int i = 0; i < 3; ++i) fl.push_back({"f" + std::to_string(i), 64 + static_cast<std::int64_t>(rng() % 400), 1000});
    const Instance inst = fixtures::chain(2, fl);
    std::vector<double> prev(inst.flows.size(), kInf);
    for (std::int64_t w = 40; w <= 1000; w += 40) {
      const auto rep = TdmaAnalyzer{}.analyze(inst, uniform_windows(inst, {0, w, 1000}), AnalysisParams{});
      for (const auto& d : rep.flows) {
        EXPECT_LE(d.wcd_us, prev[d.flow]) << "w=" << w;
        prev[d.flow] = d.wcd_us;
      }
    }
  }
}

TEST(FlowWcd, CompetitionNeverHelps) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<fixtures::FlowSpec> fl{{"a", 64 + static_cast<std::int64_t>(rng() % 800), 1000},
                                       {"b", 64 + static_cast<std::int64_t>(rng() % 800), 2000}};
    const Instance base = fixtures::chain(2, fl);
    fl.push_back({"c", 64 + static_cast<std::int64_t>(rng() % 800), 1000});
    const Instance more = fixtures::chain(2, fl);
    const WindowConfig w{0, 100 + static_cast<std::int64_t>(rng() % 300), 1000};
    const auto r0 = TdmaAnalyzer{}.analyze(base, uniform_windows(base, w), AnalysisParams{});
    const auto r1 = TdmaAnalyzer{}.analyze(more, uniform_windows(more, w), AnalysisParams{});
    for (FlowIndex f = 0; f < 2; ++f) EXPECT_LE(r0.flows[f].wcd_us, r1.flows[f].wcd_us);
  }
}

TEST(FlowWcd, StoreAndForwardFloor) {
  TdmaAnalyzer an;
  for (std::size_t i = 0; i < 6; ++i) {
    const Instance inst = fixtures::suite_instance(i);
    SearchParams sp;
    sp.max_iterations = 30;
    const auto r = synthesize(inst, sp, an);
    const Schedule s = to_schedule(r.domains, r.best_candidate);
    for (const auto& d : an.analyze(inst, s, AnalysisParams{}).flows) {
      const Flow& f = inst.flows[d.flow];
      double floor = 0.0;
      for (LinkIndex l : f.route) floor += transmission_us(inst.wire_bytes(f), inst.links[l]);
      EXPECT_GE(d.wcd_us + 1e-9, floor);
      EXPECT_EQ(d.schedulable, std::isfinite(d.wcd_us) && d.wcd_us <= static_cast<double>(f.deadline.count()));
    }
  }
}
