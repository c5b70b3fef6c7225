#pragma once

// Brute-force references for the closed-form capacity and demand areas.

#include <optional>
#include <vector>

#include "tsngcl/tsngcl.hpp"

namespace oracles {

using namespace tsngcl;

// Fluid capacity curve sampled on the integer grid: bytes accrue at J/w per
// microsecond while the gate is open. Returns the trapezoid area in 1/16
// byte-us, or nullopt when the grid sum is not a whole number of units.
inline std::optional<std::int64_t> capacity(std::int64_t phi, std::int64_t w, std::int64_t t, std::int64_t gb,
                                           std::int64_t k, std::int64_t speed) {
  const std::int64_t jbits = (w - gb) * speed;
  // open_time(x): gate-open microseconds in [0, x).
  std::vector<std::int64_t> open(static_cast<std::size_t>(k + 1), 0);
  for (std::int64_t x = 0; x < k; ++x) {
    const std::int64_t r = x % t;
    open[static_cast<std::size_t>(x + 1)] = open[static_cast<std::size_t>(x)] + (r >= phi && r < phi + w ? 1 : 0);
  }
  // area in bits*us = sum (c_x + c_{x+1}) / 2 with c_x = open_x * jbits / w; one unit is 2 bits*us.
  __int128 scaled = 0;  // w * units
  for (std::int64_t x = 0; x < k; ++x)
    scaled += static_cast<__int128>(open[static_cast<std::size_t>(x)] + open[static_cast<std::size_t>(x + 1)]) * jbits;
  if (w == 0) return 0;
  if (scaled % w != 0) return std::nullopt;
  return static_cast<std::int64_t>(scaled / w);
}

// Staircase of cumulative arrivals: every flow releases at each period start,
// switch-arriving flows add one more copy delayed by one period.
inline std::int64_t demand(const std::vector<DemandFlow>& all, const std::vector<DemandFlow>& sw, std::int64_t k) {
  std::int64_t area = 0;  // byte*us
  for (std::int64_t x = 0; x < k; ++x) {
    std::int64_t level = 0;
    for (const auto& f : all) level += (x / f.period.count() + 1) * f.bytes;
    for (const auto& f : sw)
      if (x >= f.period.count()) level += (x / f.period.count()) * f.bytes;
    area += level;
  }
  return area * Area::kUnitsPerByteMicro;
}

}  // namespace oracles
