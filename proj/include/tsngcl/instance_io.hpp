#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tsngcl/model.hpp"

namespace tsngcl {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kInstanceFormat = "tsngcl-instance";
inline constexpr int kInstanceVersion = 1;

inline json instance_to_json(const Instance& inst) {
  json j;
  j["format"] = kInstanceFormat;
  j["version"] = kInstanceVersion;
  j["frame_overhead_bytes"] = inst.frame_overhead_bytes;
  j["frame_bounds"] = {{"min_bytes", inst.frame_bounds.min_bytes}, {"max_bytes", inst.frame_bounds.max_bytes}};
  j["nodes"] = json::array();
  for (const auto& n : inst.nodes)
    j["nodes"].push_back({{"id", n.id}, {"kind", n.kind == NodeKind::Switch ? "switch" : "end_system"}});
  j["links"] = json::array();
  for (const auto& l : inst.links)
    j["links"].push_back({{"src", inst.nodes.at(l.src).id},
                          {"dst", inst.nodes.at(l.dst).id},
                          {"speed_mbps", l.speed_mbps},
                          {"macrotick_us", l.macrotick.count()}});
  j["flows"] = json::array();
  for (const auto& f : inst.flows) {
    json route = json::array();
    if (!f.route.empty()) route.push_back(inst.nodes.at(inst.links.at(f.route.front()).src).id);
    for (LinkIndex l : f.route) route.push_back(inst.nodes.at(inst.links.at(l).dst).id);
    j["flows"].push_back({{"id", f.id},
                          {"payload_bytes", f.payload_bytes},
                          {"period_us", f.period.count()},
                          {"priority", f.priority},
                          {"deadline_us", f.deadline.count()},
                          {"route", route}});
  }
  return j;
}

namespace detail {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::ParseError, where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ParseError, where + ": field '" + key + "' has the wrong type");
  }
}

inline const json& array_field(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_array())
    throw Error(ErrorCode::ParseError, std::string("missing array section '") + key + "'");
  return obj.at(key);
}

}  // namespace detail

/// Parses an instance document. Throws ParseError on schema problems; does not
/// run structural validation.
inline Instance instance_from_json(const json& j) {
  using detail::field;
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "instance document must be an object");
  if (j.contains("format") && j.at("format") != kInstanceFormat)
    throw Error(ErrorCode::ParseError, "unexpected format tag");
  Instance inst;
  inst.frame_overhead_bytes = j.value("frame_overhead_bytes", std::int64_t{0});
  if (j.contains("frame_bounds")) {
    inst.frame_bounds.min_bytes = field<std::int64_t>(j["frame_bounds"], "min_bytes", "frame_bounds");
    inst.frame_bounds.max_bytes = field<std::int64_t>(j["frame_bounds"], "max_bytes", "frame_bounds");
  }

  const auto& nodes = detail::array_field(j, "nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto kind = field<std::string>(nodes[i], "kind", where);
    Node n{field<std::string>(nodes[i], "id", where), NodeKind::EndSystem};
    if (kind == "switch") n.kind = NodeKind::Switch;
    else if (kind != "end_system") throw Error(ErrorCode::ParseError, where + ": unknown kind '" + kind + "'");
    inst.nodes.push_back(std::move(n));
  }

  auto node_ref = [&](const std::string& id, const std::string& where) {
    auto n = inst.find_node(id);
    if (!n) throw Error(ErrorCode::ParseError, where + ": unknown node '" + id + "'");
    return *n;
  };

  const auto& links = detail::array_field(j, "links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    Link l;
    l.src = node_ref(field<std::string>(links[i], "src", where), where);
    l.dst = node_ref(field<std::string>(links[i], "dst", where), where);
    l.speed_mbps = field<std::int64_t>(links[i], "speed_mbps", where);
    l.macrotick = microseconds{links[i].value("macrotick_us", std::int64_t{1})};
    inst.links.push_back(l);
  }

  const auto& flows = detail::array_field(j, "flows");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string where = "flows[" + std::to_string(i) + "]";
    Flow f;
    f.id = field<std::string>(flows[i], "id", where);
    f.payload_bytes = field<std::int64_t>(flows[i], "payload_bytes", where);
    f.period = microseconds{field<std::int64_t>(flows[i], "period_us", where)};
    f.priority = field<int>(flows[i], "priority", where);
    f.deadline = microseconds{field<std::int64_t>(flows[i], "deadline_us", where)};
    const auto route = field<std::vector<std::string>>(flows[i], "route", where);
    if (route.size() < 2) throw Error(ErrorCode::ParseError, where + ": route needs at least two nodes");
    for (std::size_t h = 0; h + 1 < route.size(); ++h) {
      const NodeIndex a = node_ref(route[h], where);
      const NodeIndex b = node_ref(route[h + 1], where);
      auto l = inst.find_link(a, b);
      if (!l) throw Error(ErrorCode::ParseError, where + ": no link " + route[h] + "->" + route[h + 1]);
      f.route.push_back(*l);
    }
    inst.flows.push_back(std::move(f));
  }
  return inst;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, origin + ": " + e.what());
  }
}

/// Writes via a temporary sibling file and rename so readers never see partial output.
inline void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline Instance load_instance(const std::filesystem::path& path) {
  Instance inst = instance_from_json(parse_json_text(read_text_file(path), path.string()));
  auto report = validate_instance(inst);
  if (!report.ok()) throw Error(ErrorCode::ValidationFailed, path.string() + ": " + report.summary());
  return inst;
}

inline void save_instance(const Instance& inst, const std::filesystem::path& path) {
  write_text_file_atomic(path, dump_json(instance_to_json(inst)));
}

}  // namespace tsngcl
