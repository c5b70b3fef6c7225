#pragma once

// Piecewise-linear cumulative curves (bytes over microseconds) and the handful
// of min-plus operations the delay analysis needs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tsngcl/error.hpp"

namespace tsngcl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CurvePiece {
  double start = 0.0;  // us
  double value = 0.0;  // bytes at `start` (right limit)
  double slope = 0.0;  // bytes/us until the next piece
};

class CumulativeCurve {
 public:
  CumulativeCurve() : pieces_{{0.0, 0.0, 0.0}} {}

  explicit CumulativeCurve(std::vector<CurvePiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty() || pieces_.front().start != 0.0)
      throw Error(ErrorCode::ConfigError, "curve must start at t = 0");
    for (std::size_t i = 1; i < pieces_.size(); ++i)
      if (!(pieces_[i].start > pieces_[i - 1].start))
        throw Error(ErrorCode::ConfigError, "curve breakpoints must be strictly increasing");
  }

  /// Token bucket: burst + rate * t.
  static CumulativeCurve token_bucket(double burst, double rate) { return CumulativeCurve({{0.0, burst, rate}}); }

  /// Rate-latency: rate * max(0, t - latency).
  static CumulativeCurve rate_latency(double rate, double latency) {
    if (latency <= 0.0) return CumulativeCurve({{0.0, 0.0, rate}});
    return CumulativeCurve({{0.0, 0.0, 0.0}, {latency, 0.0, rate}});
  }

  const std::vector<CurvePiece>& pieces() const { return pieces_; }
  double final_slope() const { return pieces_.back().slope; }

  double at(double t) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double x, const CurvePiece& p) { return x < p.start; });
    if (it == pieces_.begin()) return pieces_.front().value;
    --it;
    return it->value + it->slope * (t - it->start);
  }

  /// Smallest t with curve(t) >= y (infinity when never reached).
  double inverse(double y) const {
    if (pieces_.front().value >= y) return 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& p = pieces_[i];
      const double end = i + 1 < pieces_.size() ? pieces_[i + 1].start : kInf;
      const double end_value = i + 1 < pieces_.size() ? p.value + p.slope * (end - p.start) : kInf;
      if (p.value >= y) return p.start;
      if (p.slope > 0.0 && end_value >= y) return p.start + (y - p.value) / p.slope;
      if (i + 1 < pieces_.size() && pieces_[i + 1].value >= y) return pieces_[i + 1].start;
    }
    return kInf;
  }

  bool nondecreasing() const {
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (pieces_[i].slope < 0.0) return false;
      if (i > 0) {
        const auto& a = pieces_[i - 1];
        if (pieces_[i].value + 1e-9 < a.value + a.slope * (pieces_[i].start - a.start)) return false;
      }
    }
    return pieces_.front().value >= 0.0;
  }

  bool concave() const {
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      const auto& a = pieces_[i - 1];
      if (std::abs(pieces_[i].value - (a.value + a.slope * (pieces_[i].start - a.start))) > 1e-9) return false;
      if (pieces_[i].slope > a.slope + 1e-12) return false;
    }
    return true;
  }

  friend CumulativeCurve operator+(const CumulativeCurve& a, const CumulativeCurve& b) {
    std::vector<double> ts;
    for (const auto& p : a.pieces_) ts.push_back(p.start);
    for (const auto& p : b.pieces_) ts.push_back(p.start);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<CurvePiece> out;
    for (double t : ts) out.push_back({t, a.at(t) + b.at(t), a.slope_at(t) + b.slope_at(t)});
    return CumulativeCurve(std::move(out));
  }

 private:
  double slope_at(double t) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double x, const CurvePiece& p) { return x < p.start; });
    return it == pieces_.begin() ? pieces_.front().slope : std::prev(it)->slope;
  }

  std::vector<CurvePiece> pieces_;
};

/// Max horizontal distance between an arrival and a service curve.
/// Throws UnstableQueue when the long-run arrival rate exceeds the service rate.
inline double horizontal_deviation(const CumulativeCurve& arrival, const CumulativeCurve& service) {
  if (arrival.final_slope() > service.final_slope() + 1e-12)
    throw Error(ErrorCode::UnstableQueue, "arrival rate exceeds service rate");
  std::vector<double> ts{0.0};
  for (const auto& p : arrival.pieces()) ts.push_back(p.start);
  for (const auto& p : service.pieces()) {
    const double t = arrival.inverse(p.value);
    if (std::isfinite(t)) ts.push_back(t);
  }
  double h = 0.0;
  for (double t : ts) {
    const double d = service.inverse(arrival.at(t)) - t;
    if (!std::isfinite(d)) throw Error(ErrorCode::UnstableQueue, "service never catches up with arrivals");
    h = std::max(h, d);
  }
  return h;
}

/// Min-plus deconvolution of a concave arrival curve by a convex service curve.
inline CumulativeCurve deconvolve(const CumulativeCurve& arrival, const CumulativeCurve& service) {
  if (arrival.final_slope() > service.final_slope() + 1e-12)
    throw Error(ErrorCode::UnstableQueue, "arrival rate exceeds service rate");
  std::vector<double> us{0.0};
  for (const auto& p : service.pieces()) us.push_back(p.start);
  auto value = [&](double t) {
    double best = -kInf;
    auto consider = [&](double u) {
      if (u >= 0.0) best = std::max(best, arrival.at(t + u) - service.at(u));
    };
    for (double u : us) consider(u);
    for (const auto& p : arrival.pieces()) consider(p.start - t);
    return best;
  };
  std::vector<double> ts{0.0};
  for (const auto& a : arrival.pieces())
    for (double u : us)
      if (a.start - u > 0.0) ts.push_back(a.start - u);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<CurvePiece> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double v = value(ts[i]);
    const double slope = i + 1 < ts.size() ? (value(ts[i + 1]) - v) / (ts[i + 1] - ts[i]) : arrival.final_slope();
    if (!out.empty() && std::abs(out.back().slope - slope) < 1e-12) continue;
    out.push_back({ts[i], v, slope});
  }
  return CumulativeCurve(std::move(out));
}

// Closed-form shapes used on the analysis fast path.

struct TokenBucket {
  double burst = 0.0;  // bytes
  double rate = 0.0;   // bytes/us

  CumulativeCurve curve() const { return CumulativeCurve::token_bucket(burst, rate); }
};

struct RateLatency {
  double rate = 0.0;     // bytes/us
  double latency = 0.0;  // us

  CumulativeCurve curve() const { return CumulativeCurve::rate_latency(rate, latency); }
};

inline double horizontal_deviation(const TokenBucket& a, const RateLatency& s) {
  if (a.rate > s.rate + 1e-12 || s.rate <= 0.0) throw Error(ErrorCode::UnstableQueue, "arrival rate exceeds service rate");
  return s.latency + a.burst / s.rate;
}

inline TokenBucket deconvolve(const TokenBucket& a, const RateLatency& s) {
  if (a.rate > s.rate + 1e-12) throw Error(ErrorCode::UnstableQueue, "arrival rate exceeds service rate");
  return {a.burst + a.rate * s.latency, a.rate};
}

}  // namespace tsngcl
