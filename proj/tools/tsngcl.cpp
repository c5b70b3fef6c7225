// tsngcl: generate instances, synthesise gate schedules, analyse, simulate and compare.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "tsngcl/tsngcl.hpp"

namespace fs = std::filesystem;
using namespace tsngcl;

namespace {

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Usage: return 2;
    case ErrorCode::FileNotFound: return 3;
    case ErrorCode::ParseError:
    case ErrorCode::ValidationFailed: return 4;
    case ErrorCode::NoFeasibleSolutionFound: return 5;
    default: return 1;
  }
}

void diagnose(std::string_view code, std::string_view message) {
  std::cerr << "error: code=" << code << " message=" << std::quoted(std::string(message)) << '\n';
}

/// Relative output paths land under $TSNGCL_OUT_DIR when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (const char* dir = std::getenv("TSNGCL_OUT_DIR"); dir && *dir && path.is_relative()) path = fs::path(dir) / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

struct Run {
  std::string command;
  json params = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  explicit Run(std::string cmd) : command(std::move(cmd)) {}

  std::string read_input(const std::string& path) {
    std::string text = read_text_file(path);
    inputs.emplace_back(path, text);
    return text;
  }
  Instance instance(const std::string& path) {
    Instance inst = instance_from_json(parse_json_text(read_input(path), path));
    if (auto rep = validate_instance(inst); !rep.ok()) throw Error(ErrorCode::ValidationFailed, path + ": " + rep.summary());
    return inst;
  }
  Schedule schedule(const Instance& inst, const std::string& path) {
    return schedule_from_json(inst, parse_json_text(read_input(path), path));
  }
  json manifest() const { return run_manifest(command, params, inputs); }

  /// Timestamps are kept beside the artifact so the artifact itself stays reproducible.
  void write_sidecar(const fs::path& artifact) const {
    const auto m = manifest();
    json side{{"manifest", m},
              {"manifest_sha256", sha256_hex(m.dump())},
              {"artifact_sha256", sha256_hex(read_text_file(artifact))},
              {"started_at", utc_timestamp(started)},
              {"finished_at", utc_timestamp(std::chrono::system_clock::now())},
              {"elapsed_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    write_text_file_atomic(artifact.string() + ".manifest.json", dump_json(side));
  }
};

void emit(const std::optional<std::string>& out, const std::string& text, const Run* run = nullptr) {
  if (!out) {
    std::cout << text;
    return;
  }
  const fs::path p = output_path(*out);
  write_text_file_atomic(p, text);
  if (run) run->write_sidecar(p);
}

std::string pad(std::string s, std::size_t n) {
  if (s.size() < n) s.append(n - s.size(), ' ');
  return s;
}

std::string delay_table(const Instance& inst, const DelayReport& r) {
  std::ostringstream o;
  o << pad("flow", 12) << pad("wcd_us", 14) << pad("deadline_us", 14) << pad("slack_us", 14) << "schedulable\n";
  for (const auto& d : r.flows) {
    const double dl = static_cast<double>(inst.flows[d.flow].deadline.count());
    o << pad(inst.flows[d.flow].id, 12) << pad(fixed(d.wcd_us, 3), 14) << pad(fixed(dl, 3), 14)
      << pad(fixed(dl - d.wcd_us, 3), 14) << (d.schedulable ? "yes" : "no") << '\n';
  }
  o << "mean_wcd_us " << fixed(r.mean_wcd(), 3) << "  unschedulable " << r.unschedulable_count() << '\n';
  return o.str();
}

json delay_json(const Instance& inst, const DelayReport& r) {
  json flows = json::array();
  for (const auto& d : r.flows) {
    const double dl = static_cast<double>(inst.flows[d.flow].deadline.count());
    flows.push_back({{"flow", inst.flows[d.flow].id},
                     {"wcd_us", d.wcd_us},
                     {"deadline_us", dl},
                     {"slack_us", dl - d.wcd_us},
                     {"per_hop_us", d.per_hop_us},
                     {"schedulable", d.schedulable}});
  }
  return flows;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string topology = "srm";
  std::size_t sw = 2, es = 3, flows = 9;
  std::uint64_t seed = 1;
  std::int64_t speed = 100, macrotick = 1;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  Run run{"gen"};
  GenSpec spec;
  spec.topology = parse_topology(a.topology);
  spec.switches = a.sw;
  spec.end_systems = a.es;
  spec.flows = a.flows;
  spec.seed = a.seed;
  spec.speed_mbps = a.speed;
  spec.macrotick_us = a.macrotick;
  run.params = {{"topology", a.topology}, {"sw", a.sw},       {"es", a.es},
                {"flows", a.flows},       {"seed", a.seed},   {"speed_mbps", a.speed},
                {"macrotick_us", a.macrotick}};
  const Instance inst = generate(spec);
  json j = instance_to_json(inst);
  j["manifest"] = run.manifest();
  emit(a.out, dump_json(j), &run);
  return 0;
}

struct SynthArgs {
  std::string instance, method = "cpwo";
  double budget = 60.0;
  int backlog = 1;
  std::uint64_t seed = 1;
  std::size_t max_iters = 3000;
  std::int64_t delta = 0;
  std::string out;
  std::optional<std::string> report;
};

int cmd_synth(const SynthArgs& a) {
  Run run{"synth"};
  const Method m = parse_method(a.method);
  run.params = {{"method", a.method}, {"budget_s", a.budget}, {"backlog", a.backlog}, {"seed", a.seed},
                {"max_iters", a.max_iters}, {"delta_us", a.delta}};
  const Instance inst = run.instance(a.instance);
  if (comparison_mode_only(m))
    std::cerr << "warning: " << a.method
              << " schedules every frame from its source; end systems here are not time-synchronised, so the result is "
                 "for comparison only\n";

  MethodOptions opt;
  opt.search.time_budget_s = a.budget;
  opt.search.backlog = a.backlog;
  opt.search.seed = a.seed;
  opt.search.max_iterations = a.max_iters;
  opt.analysis.backlog = a.backlog;
  opt.analysis.delta_precision = microseconds{a.delta};
  opt.frames.delta_us = a.delta;
  opt.frames.time_budget_s = a.budget;
  opt.wnd.time_budget_s = a.budget;
  auto outcome = run_method(inst, m, opt);
  if (!outcome.ok) throw Error(outcome.error_code, outcome.error.substr(outcome.error.find(": ") + 2));

  const json manifest = run.manifest();
  const fs::path out = output_path(a.out);
  write_text_file_atomic(out, dump_json(schedule_to_json(inst, outcome.schedule, manifest)));
  run.write_sidecar(out);

  json rep;
  rep["method"] = a.method;
  rep["omega"] = outcome.omega;
  rep["omega_x1000"] = outcome.omega * 1000.0;
  rep["mean_wcd_us"] = outcome.report.mean_wcd();
  rep["all_schedulable"] = outcome.report.all_schedulable();
  rep["flows"] = delay_json(inst, outcome.report);
  if (outcome.synthesis) {
    const auto& s = outcome.synthesis->stats;
    rep["search"] = {{"iterations", s.iterations},
                     {"candidates", s.candidates},
                     {"structurally_rejected", s.structurally_rejected},
                     {"timing_pruned", s.timing_pruned},
                     {"analyzer_calls", s.analyzer_calls},
                     {"analyzer_accepted", s.analyzer_accepted},
                     {"cache_hits", s.cache_hits},
                     {"exhaustive", s.exhaustive},
                     {"stop_reason", s.stop_reason},
                     {"incumbents", outcome.synthesis->incumbents.size()}};
  }
  rep["manifest"] = manifest;
  if (a.report) {
    const fs::path rp = output_path(*a.report);
    write_text_file_atomic(rp, dump_json(rep));
  }
  std::cout << "method " << a.method << "  omega_x1000 " << fixed(outcome.omega * 1000.0, 3) << "  mean_wcd_us "
            << fixed(outcome.report.mean_wcd(), 3) << "  schedulable " << (outcome.report.all_schedulable() ? "yes" : "no")
            << "\nwrote " << out.string() << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string instance, schedule;
  bool proxy = false;
  int backlog = 1;
  std::int64_t delta = 0;
  std::string format = "text";
  std::optional<std::string> out;
};

std::string proxy_dump(const Instance& inst, const Schedule& s, int backlog, bool as_json) {
  const auto sets = queue_flow_sets(inst);
  json all = json::array();
  for (const auto& [key, flows] : sets.queues) {
    json q{{"port", inst.link_name(key.link)}, {"queue", key.queue}};
    auto it = s.windows.find(key);
    if (it == s.windows.end() || it->second.size() != 1) {
      q["status"] = "skipped: needs exactly one window";
      all.push_back(q);
      continue;
    }
    const auto t = queue_timing(inst, key, flows, it->second.front(), backlog);
    const auto& w = it->second.front();
    q["window"] = {{"offset", w.offset}, {"length", w.length}, {"period", w.period}};
    q["hyperperiod_us"] = hyperperiod_of_port(inst, key.link).count();
    q["capacity"] = {{"s1", t.capacity.s1.byte_micros()},
                     {"s2", t.capacity.s2.byte_micros()},
                     {"s3", t.capacity.s3.byte_micros()},
                     {"total", t.capacity.total.byte_micros()},
                     {"bytes_per_window", t.capacity.bytes_per_window()},
                     {"instances", t.capacity.instances}};
    json a1 = json::object(), a2 = json::object();
    for (const auto& [f, v] : t.demand.a1) a1[inst.flows[f].id] = v.byte_micros();
    for (const auto& [f, v] : t.demand.a2) a2[inst.flows[f].id] = v.byte_micros();
    q["demand"] = {{"a1", a1}, {"a2", a2}, {"total", t.demand.total.byte_micros()}};
    q["feasible"] = t.feasible;
    all.push_back(q);
  }
  if (as_json) return dump_json(json{{"backlog", backlog}, {"queues", all}});
  std::ostringstream o;
  for (const auto& q : all) {
    o << "[" << q["port"].get<std::string>() << " q" << q["queue"].get<int>() << "]\n";
    if (q.contains("status")) {
      o << "  " << q["status"].get<std::string>() << '\n';
      continue;
    }
    const auto& c = q["capacity"];
    o << "  capacity  S1=" << c["s1"] << " S2=" << c["s2"] << " S3=" << c["s3"] << " total=" << c["total"] << '\n';
    o << "  demand    total=" << q["demand"]["total"];
    for (const auto& [id, v] : q["demand"]["a1"].items()) o << " A1[" << id << "]=" << v;
    for (const auto& [id, v] : q["demand"]["a2"].items()) o << " A2[" << id << "]=" << v;
    o << "\n  feasible  " << (q["feasible"].get<bool>() ? "yes" : "no") << '\n';
  }
  return o.str();
}

int cmd_analyze(const AnalyzeArgs& a) {
  Run run{"analyze"};
  run.params = {{"proxy", a.proxy}, {"backlog", a.backlog}, {"delta_us", a.delta}, {"format", a.format}};
  const Instance inst = run.instance(a.instance);
  const Schedule s = run.schedule(inst, a.schedule);
  const bool as_json = a.format == "json";
  if (a.proxy) {
    emit(a.out, proxy_dump(inst, s, a.backlog, as_json), a.out ? &run : nullptr);
    return 0;
  }
  AnalysisParams ap;
  ap.backlog = a.backlog;
  ap.delta_precision = microseconds{a.delta};
  const auto report = TdmaAnalyzer().analyze(inst, s, ap);
  std::string text;
  if (as_json) {
    text = dump_json(json{{"flows", delay_json(inst, report)},
                          {"mean_wcd_us", report.mean_wcd()},
                          {"all_schedulable", report.all_schedulable()},
                          {"manifest", run.manifest()}});
  } else {
    text = delay_table(inst, report);
  }
  emit(a.out, text, a.out ? &run : nullptr);
  return 0;
}

struct SimulateArgs {
  std::string instance, schedule;
  std::size_t seeds = 1;
  std::uint64_t seed = 1;
  std::int64_t duration = 0;
  std::optional<std::string> trace, out;
};

int cmd_simulate(const SimulateArgs& a) {
  Run run{"simulate"};
  run.params = {{"seeds", a.seeds}, {"first_seed", a.seed}, {"duration_us", a.duration}, {"trace", a.trace.has_value()}};
  const Instance inst = run.instance(a.instance);
  const Schedule s = run.schedule(inst, a.schedule);
  if (a.seeds < 1) throw Error(ErrorCode::Usage, "--seeds must be at least 1");

  const std::size_t n = inst.flows.size();
  std::vector<std::int64_t> max_d(n, 0), min_d(n, kNever), jitter(n, 0);
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  std::size_t drops = 0, undelivered = 0;
  std::ostringstream trace;
  trace << "seed,flow,instance,release_ns,hop,port,queue,enqueue_ns,start_ns,end_ns,delivered_ns\n";
  for (std::size_t k = 0; k < a.seeds; ++k) {
    SimConfig cfg;
    cfg.seed = a.seed + k;
    cfg.duration_us = a.duration;
    cfg.record_trace = a.trace.has_value();
    const auto r = simulate(inst, s, cfg);
    drops += r.drops;
    undelivered += r.undelivered;
    for (const auto& st : r.flows) {
      if (!st.delivered) continue;
      max_d[st.flow] = std::max(max_d[st.flow], st.max_delay_ns);
      min_d[st.flow] = std::min(min_d[st.flow], st.min_delay_ns);
      sum[st.flow] += st.mean_delay_ns * static_cast<double>(st.delivered);
      count[st.flow] += st.delivered;
      for (std::size_t h = 0; h < st.hop_start_min_ns.size(); ++h) jitter[st.flow] = std::max(jitter[st.flow], st.hop_jitter_ns(h));
    }
    for (const auto& fr : r.trace)
      for (std::size_t h = 0; h < fr.hops.size(); ++h) {
        const auto& hp = fr.hops[h];
        trace << cfg.seed << ',' << inst.flows[fr.flow].id << ',' << fr.instance << ',' << fr.release_ns << ',' << h << ','
              << inst.link_name(hp.link) << ',' << hp.queue << ',' << hp.enqueue_ns << ',' << hp.start_ns << ','
              << hp.end_ns << ',' << fr.delivered_ns << '\n';
      }
  }
  std::ostringstream o;
  o << pad("flow", 12) << pad("frames", 10) << pad("min_us", 12) << pad("mean_us", 12) << pad("max_us", 12)
    << "max_hop_jitter_us\n";
  for (FlowIndex f = 0; f < n; ++f) {
    o << pad(inst.flows[f].id, 12) << pad(std::to_string(count[f]), 10);
    if (count[f]) {
      o << pad(fixed(static_cast<double>(min_d[f]) / 1000.0, 3), 12)
        << pad(fixed(sum[f] / static_cast<double>(count[f]) / 1000.0, 3), 12)
        << pad(fixed(static_cast<double>(max_d[f]) / 1000.0, 3), 12) << fixed(static_cast<double>(jitter[f]) / 1000.0, 3);
    } else {
      o << pad("-", 12) << pad("-", 12) << pad("-", 12) << "-";
    }
    o << '\n';
  }
  o << "seeds " << a.seeds << "  drops " << drops << "  undelivered " << undelivered << '\n';
  emit(a.out, o.str(), a.out ? &run : nullptr);
  if (a.trace) {
    const fs::path p = output_path(*a.trace);
    write_text_file_atomic(p, trace.str());
  }
  return 0;
}

struct CompareArgs {
  std::vector<std::string> instances;
  std::vector<std::string> methods{"0gcl", "fgcl", "wnd", "cpwo"};
  double budget = 60.0;
  std::uint64_t seed = 1;
  std::size_t max_iters = 3000;
  std::size_t sim_seeds = 0;
  std::string out = "compare";
};

int cmd_compare(const CompareArgs& a) {
  Run run{"compare"};
  run.params = {{"methods", a.methods}, {"budget_s", a.budget}, {"seed", a.seed}, {"max_iters", a.max_iters},
                {"sim_seeds", a.sim_seeds}};
  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  MethodOptions opt;
  opt.search.time_budget_s = a.budget;
  opt.search.seed = a.seed;
  opt.search.max_iterations = a.max_iters;
  opt.frames.time_budget_s = a.budget;
  opt.wnd.time_budget_s = a.budget;

  const fs::path dir = output_path(a.out + "/");
  std::vector<CompareRow> rows;
  std::ostringstream gantt, simb;
  gantt << "instance,method,port,queue,open_us,close_us\n";
  simb << "instance,method,flow,bound_us,sim_max_us,sim_mean_us,deadline_us,within_bound\n";
  for (const auto& path : a.instances) {
    const Instance inst = run.instance(path);
    const std::string name = fs::path(path).stem().string();
    for (Method m : methods) {
      const auto outcome = run_method(inst, m, opt);
      rows.push_back(compare_row(name, outcome));
      if (!outcome.ok) continue;
      for (const auto& g : gantt_rows(inst, outcome.schedule))
        gantt << name << ',' << to_string(m) << ',' << g.port << ',' << g.queue << ',' << g.open_us << ',' << g.close_us
              << '\n';
      if (a.sim_seeds > 0)
        for (const auto& r : sim_vs_bound(inst, outcome.schedule, outcome.report, a.seed, a.sim_seeds))
          simb << name << ',' << to_string(m) << ',' << r.flow << ',' << r.bound_us << ',' << r.sim_max_us << ','
               << r.sim_mean_us << ',' << r.deadline_us << ',' << (r.within ? "yes" : "no") << '\n';
    }
  }
  const std::string table = compare_csv(rows);
  write_text_file_atomic(dir / "table.csv", table);
  run.write_sidecar(dir / "table.csv");
  write_text_file_atomic(dir / "gantt.csv", gantt.str());
  if (a.sim_seeds > 0) write_text_file_atomic(dir / "sim_vs_bound.csv", simb.str());
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gate control list synthesis and analysis for time-sensitive networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic instance");
  g->add_option("--topology", gen.topology, "srm, mr, mm, st or mt")->capture_default_str();
  g->add_option("--sw", gen.sw, "switch count")->capture_default_str();
  g->add_option("--es", gen.es, "end-system count")->capture_default_str();
  g->add_option("--flows", gen.flows, "flow count")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--speed", gen.speed, "link speed (Mbit/s)")->capture_default_str();
  g->add_option("--macrotick", gen.macrotick, "macrotick (us)")->capture_default_str();
  g->add_option("--out", gen.out, "instance file")->required();

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "synthesise a gate schedule");
  s->add_option("--instance", syn.instance)->required();
  s->add_option("--method", syn.method, "cpwo, 0gcl, fgcl or wnd")->capture_default_str();
  s->add_option("--budget", syn.budget, "wall-clock cap (s)")->capture_default_str();
  s->add_option("--backlog", syn.backlog, "periods a switch may hold back")->capture_default_str();
  s->add_option("--seed", syn.seed)->capture_default_str();
  s->add_option("--max-iters", syn.max_iters, "search iteration cap")->capture_default_str();
  s->add_option("--delta", syn.delta, "clock precision (us)")->capture_default_str();
  s->add_option("--out", syn.out, "schedule file")->required();
  s->add_option("--report", syn.report, "report file (JSON)");

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "bound end-to-end delays of a schedule");
  z->add_option("--instance", an.instance)->required();
  z->add_option("--schedule", an.schedule)->required();
  z->add_flag("--proxy", an.proxy, "dump capacity and demand per queue instead");
  z->add_option("--backlog", an.backlog)->capture_default_str();
  z->add_option("--delta", an.delta, "clock precision (us)")->capture_default_str();
  z->add_option("--format", an.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  z->add_option("--out", an.out);

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "run the discrete-event switch simulation");
  m->add_option("--instance", sim.instance)->required();
  m->add_option("--schedule", sim.schedule)->required();
  m->add_option("--seeds", sim.seeds, "number of phase draws")->capture_default_str();
  m->add_option("--seed", sim.seed, "first seed")->capture_default_str();
  m->add_option("--duration", sim.duration, "simulated time (us); 0 = two hyperperiods")->capture_default_str();
  m->add_option("--trace", sim.trace, "per-hop trace file (CSV)");
  m->add_option("--out", sim.out, "summary file");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "run several methods on several instances");
  c->add_option("--instance", cmp.instances)->required();
  c->add_option("--methods", cmp.methods)->delimiter(',')->capture_default_str();
  c->add_option("--budget", cmp.budget)->capture_default_str();
  c->add_option("--seed", cmp.seed)->capture_default_str();
  c->add_option("--max-iters", cmp.max_iters)->capture_default_str();
  c->add_option("--sim-seeds", cmp.sim_seeds, "simulated phase draws per schedule (0 skips)")->capture_default_str();
  c->add_option("--out", cmp.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    diagnose("Usage", e.what());
    return 2;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*s) return cmd_synth(syn);
    if (*z) return cmd_analyze(an);
    if (*m) return cmd_simulate(sim);
    if (*c) return cmd_compare(cmp);
  } catch (const Error& e) {
    std::string msg = e.what();
    msg = msg.substr(msg.find(": ") + 2);
    diagnose(to_string(e.code()), msg);
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    diagnose("Internal", e.what());
    return 1;
  }
  return 2;
}
