#pragma once

// Run plumbing shared by the command-line tool: method dispatch, comparison
// rows, plot-ready exports and reproducibility manifests.

#include <openssl/evp.h>

#include <chrono>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tsngcl/analysis.hpp"
#include "tsngcl/baselines.hpp"
#include "tsngcl/instance_io.hpp"
#include "tsngcl/schedule.hpp"
#include "tsngcl/simulator.hpp"
#include "tsngcl/synthesis.hpp"

namespace tsngcl {

inline constexpr std::string_view kToolVersion = "0.3.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 || EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::ConfigError, "sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

/// Deterministic part of a run manifest; timestamps live in a sidecar file.
inline json run_manifest(std::string_view command, const json& parameters,
                         const std::vector<std::pair<std::string, std::string>>& inputs /* path, contents */) {
  json m;
  m["tool"] = "tsngcl";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["parameters"] = parameters;
  m["inputs"] = json::array();
  for (const auto& [path, text] : inputs) m["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(text)}});
  return m;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// ---------------------------------------------------------------------------
// Methods

enum class Method { Cpwo, ZeroGcl, Fgcl, Wnd };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Cpwo: return "cpwo";
    case Method::ZeroGcl: return "0gcl";
    case Method::Fgcl: return "fgcl";
    case Method::Wnd: return "wnd";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::Cpwo, Method::ZeroGcl, Method::Fgcl, Method::Wnd})
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::Usage, "unknown method '" + std::string(s) + "' (cpwo, 0gcl, fgcl, wnd)");
}

/// Frame-level methods schedule the sources, which unsynchronised end systems cannot honour.
inline bool comparison_mode_only(Method m) { return m == Method::ZeroGcl || m == Method::Fgcl; }

struct MethodOptions {
  SearchParams search;
  AnalysisParams analysis;
  FrameSchedulerParams frames;
  WndParams wnd;
};

struct MethodOutcome {
  Method method = Method::Cpwo;
  bool ok = false;
  std::string error;  // "<Code>: message" when !ok
  ErrorCode error_code = ErrorCode::ConfigError;
  Schedule schedule;
  DelayReport report;
  double omega = 0.0;
  double runtime_s = 0.0;
  std::optional<SynthesisResult> synthesis;  // cpwo only
};

inline MethodOutcome run_method(const Instance& inst, Method m, const MethodOptions& opt) {
  MethodOutcome out;
  out.method = m;
  const auto t0 = std::chrono::steady_clock::now();
  TdmaAnalyzer analyzer;
  try {
    switch (m) {
      case Method::Cpwo: {
        auto r = optimize(inst, opt.search, analyzer, opt.analysis);
        out.schedule = r.best().schedule;
        out.report = r.best().report;
        out.synthesis = std::move(r);
        break;
      }
      case Method::ZeroGcl: {
        const auto fs = schedule_0gcl(inst, opt.frames);
        out.schedule = to_schedule(inst, fs);
        out.report = frame_schedule_delays(inst, fs, opt.frames.delta_us);
        break;
      }
      case Method::Fgcl: {
        const auto fs = schedule_fgcl(inst, opt.frames);
        out.schedule = to_schedule(inst, fs);
        out.report = frame_schedule_delays(inst, fs, opt.frames.delta_us);
        break;
      }
      case Method::Wnd: {
        auto r = schedule_wnd(inst, analyzer, opt.analysis, opt.wnd);
        out.schedule = std::move(r.schedule);
        out.report = std::move(r.report);
        break;
      }
    }
    out.omega = objective_omega(out.schedule);
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
    out.error_code = e.code();
  }
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Exports

struct GanttRow {
  std::string port;
  int queue = 0;
  std::int64_t open_us = 0;
  std::int64_t close_us = 0;
};

/// Window open intervals of every port over one cycle of that port (microseconds).
inline std::vector<GanttRow> gantt_rows(const Instance& inst, const Schedule& s) {
  std::map<LinkIndex, std::int64_t> cycle;
  for (const auto& [key, ws] : s.windows)
    for (const auto& w : ws) cycle[key.link] = checked_lcm(cycle.count(key.link) ? cycle[key.link] : 1, w.period);
  std::vector<GanttRow> rows;
  for (const auto& [key, ws] : s.windows) {
    const std::int64_t mt = inst.links[key.link].macrotick.count();
    for (const auto& iv : expand_windows(ws, cycle[key.link]))
      rows.push_back({inst.link_name(key.link), key.queue, iv.open * mt, iv.close * mt});
  }
  return rows;
}

inline std::string gantt_csv(const std::vector<GanttRow>& rows) {
  std::ostringstream o;
  o << "port,queue,open_us,close_us\n";
  for (const auto& r : rows) o << r.port << ',' << r.queue << ',' << r.open_us << ',' << r.close_us << '\n';
  return o.str();
}

struct SimBoundRow {
  std::string flow;
  double bound_us = 0.0;
  double sim_max_us = 0.0;
  double sim_mean_us = 0.0;
  double deadline_us = 0.0;
  bool within = true;
};

/// Maximum simulated delay over `seeds` random phase draws against the analysed bound.
inline std::vector<SimBoundRow> sim_vs_bound(const Instance& inst, const Schedule& s, const DelayReport& bounds,
                                             std::uint64_t first_seed, std::size_t seeds, std::int64_t duration_us = 0) {
  std::vector<SimBoundRow> rows(inst.flows.size());
  std::vector<double> sum(inst.flows.size(), 0.0);
  std::vector<std::size_t> n(inst.flows.size(), 0);
  for (std::size_t k = 0; k < seeds; ++k) {
    SimConfig cfg;
    cfg.seed = first_seed + k;
    cfg.duration_us = duration_us;
    const auto r = simulate(inst, s, cfg);
    for (const auto& st : r.flows) {
      rows[st.flow].sim_max_us = std::max(rows[st.flow].sim_max_us, static_cast<double>(st.max_delay_ns) / 1000.0);
      sum[st.flow] += st.mean_delay_ns * static_cast<double>(st.delivered);
      n[st.flow] += st.delivered;
    }
  }
  for (FlowIndex f = 0; f < inst.flows.size(); ++f) {
    rows[f].flow = inst.flows[f].id;
    rows[f].bound_us = bounds.flows.at(f).wcd_us;
    rows[f].deadline_us = static_cast<double>(inst.flows[f].deadline.count());
    rows[f].sim_mean_us = n[f] ? sum[f] / static_cast<double>(n[f]) / 1000.0 : 0.0;
    rows[f].within = rows[f].sim_max_us <= rows[f].bound_us + 1e-9;
  }
  return rows;
}

inline std::string sim_vs_bound_csv(const std::vector<SimBoundRow>& rows) {
  std::ostringstream o;
  o << "flow,bound_us,sim_max_us,sim_mean_us,deadline_us,within_bound\n";
  for (const auto& r : rows)
    o << r.flow << ',' << r.bound_us << ',' << r.sim_max_us << ',' << r.sim_mean_us << ',' << r.deadline_us << ','
      << (r.within ? "yes" : "no") << '\n';
  return o.str();
}

struct CompareRow {
  std::string instance;
  std::string method;
  bool ok = false;
  double omega_x1000 = 0.0;
  double mean_wcd_us = 0.0;
  double runtime_s = 0.0;
  bool schedulable = false;
  std::string note;
};

inline CompareRow compare_row(const std::string& instance, const MethodOutcome& o) {
  CompareRow r{instance, std::string(to_string(o.method)), o.ok, 0.0, 0.0, o.runtime_s, false, {}};
  if (o.ok) {
    r.omega_x1000 = o.omega * 1000.0;
    r.mean_wcd_us = o.report.mean_wcd();
    r.schedulable = o.report.all_schedulable();
    if (comparison_mode_only(o.method)) r.note = "scheduled sources";
  } else {
    r.note = o.error;
  }
  return r;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream o;
  o << "instance,method,omega_x1000,mean_wcd_us,runtime_s,schedulable,note\n";
  for (const auto& r : rows) {
    o << r.instance << ',' << r.method << ',';
    if (r.ok) o << fixed(r.omega_x1000, 3) << ',' << fixed(r.mean_wcd_us, 3) << ',';
    else o << "N/A,N/A,";
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    o << fixed(r.runtime_s, 3) << ',' << (r.ok ? (r.schedulable ? "yes" : "no") : "N/A") << ',' << note << '\n';
  }
  return o.str();
}

}  // namespace tsngcl
