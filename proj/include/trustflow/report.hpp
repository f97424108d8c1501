#pragma once

// Outputs for the three audiences: a DOT graph at point, component or
// application level; a self-contained JSON report; and a plain-text summary
// of transitive flows for end users.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "trustflow/catalog.hpp"
#include "trustflow/flowgraph.hpp"
#include "trustflow/json_util.hpp"
#include "trustflow/risk.hpp"

namespace trustflow {

// ---------------------------------------------------------------------------
// Graph document

inline json graph_to_json(const FlowGraph& g) {
  json nodes = json::array();
  for (const auto& [id, n] : g.nodes()) {
    json j = {{"id", id}, {"kind", to_string(n.kind)}, {"app", n.app}};
    if (!n.component.empty()) j["component"] = n.component;
    if (n.role) j["role"] = to_string(*n.role);
    if (n.origin) j["origin"] = to_string(*n.origin);
    if (n.kind == NodeKind::Point) j["exported"] = n.exported;
    if (!n.api.empty()) j["api"] = n.api;
    if (!n.channel.empty()) j["channel"] = n.channel;
    if (n.criticality) j["level"] = to_string(*n.criticality);
    if (n.complexity) j["level"] = to_string(*n.complexity);
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : g.edges()) {
    json j = {{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)}};
    if (!e.via.empty()) j["via"] = e.via;
    if (e.permission_blocked) j["permission_blocked"] = true;
    if (e.export_blocked) j["export_blocked"] = true;
    edges.push_back(std::move(j));
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

inline std::string dump_graph(const FlowGraph& g) { return graph_to_json(g).dump(2) + "\n"; }

inline FlowGraph graph_from_json(const json& doc) {
  using namespace detail;
  expect_keys(doc, {"nodes", "edges"}, "graph");
  FlowGraph g;
  const auto& nodes = get_array(doc, "nodes", "graph");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string at = "nodes[" + std::to_string(i) + "]";
    const auto& j = nodes[i];
    expect_keys(j, {"id", "kind", "app", "component", "role", "origin", "exported", "api", "channel",
                    "level"},
                at);
    FlowNode n;
    n.id = get_string(j, "id", at);
    const auto kind = get_string(j, "kind", at);
    if (kind == "point") {
      n.kind = NodeKind::Point;
    } else if (kind == "source") {
      n.kind = NodeKind::Source;
    } else if (kind == "sink") {
      n.kind = NodeKind::Sink;
    } else {
      throw Error(ErrorCode::Schema, at + ".kind: unknown node kind \"" + kind + "\"");
    }
    n.app = get_string(j, "app", at);
    n.component = get_optional_string(j, "component", at).value_or("");
    if (auto role = get_optional_string(j, "role", at)) {
      n.role = *role == "entry" ? PointRole::Entry : PointRole::Exit;
    }
    if (auto origin = get_optional_string(j, "origin", at)) {
      n.origin = parse_point_origin(*origin);
      if (!n.origin) throw Error(ErrorCode::Schema, at + ".origin: unknown origin");
    }
    if (j.contains("exported")) n.exported = get_bool(j, "exported", at);
    n.api = get_optional_string(j, "api", at).value_or("");
    n.channel = get_optional_string(j, "channel", at).value_or("");
    if (auto level = get_optional_string(j, "level", at)) {
      if (n.kind == NodeKind::Source) {
        n.criticality = parse_criticality(*level);
        if (!n.criticality) throw Error(ErrorCode::UnknownLevel, at + ": \"" + *level + "\"");
      } else if (n.kind == NodeKind::Sink) {
        n.complexity = parse_attack_complexity(*level);
        if (!n.complexity) throw Error(ErrorCode::UnknownLevel, at + ": \"" + *level + "\"");
      }
    }
    g.add_node(std::move(n));
  }
  const auto& edges = get_array(doc, "edges", "graph");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string at = "edges[" + std::to_string(i) + "]";
    const auto& j = edges[i];
    expect_keys(j, {"from", "to", "kind", "via", "permission_blocked", "export_blocked"}, at);
    FlowEdge e;
    e.from = get_string(j, "from", at);
    e.to = get_string(j, "to", at);
    const auto kind = get_string(j, "kind", at);
    if (kind == "intra") {
      e.kind = EdgeKind::IntraFlow;
    } else if (kind == "ipc") {
      e.kind = EdgeKind::Ipc;
    } else if (kind == "source") {
      e.kind = EdgeKind::Source;
    } else if (kind == "sink") {
      e.kind = EdgeKind::Sink;
    } else {
      throw Error(ErrorCode::Schema, at + ".kind: unknown edge kind \"" + kind + "\"");
    }
    e.via = get_optional_string(j, "via", at).value_or("");
    if (j.contains("permission_blocked")) e.permission_blocked = get_bool(j, "permission_blocked", at);
    if (j.contains("export_blocked")) e.export_blocked = get_bool(j, "export_blocked", at);
    g.add_edge(std::move(e));
  }
  return g;
}

inline FlowGraph parse_graph(std::string_view text) {
  return graph_from_json(detail::parse_document(text));
}

// ---------------------------------------------------------------------------
// Abstraction levels

enum class GraphLevel { Point, Component, Application };

constexpr std::string_view to_string(GraphLevel l) noexcept {
  switch (l) {
    case GraphLevel::Point: return "point";
    case GraphLevel::Component: return "component";
    case GraphLevel::Application: return "application";
  }
  return "point";
}

inline std::optional<GraphLevel> parse_graph_level(std::string_view s) {
  for (auto l : {GraphLevel::Point, GraphLevel::Component, GraphLevel::Application}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

struct LevelNode {
  std::string id;
  std::string label;
  std::string kind;  // point | component | app | source | sink
  std::string app;
  std::string component;
};

struct LevelEdge {
  std::string from;
  std::string to;
  EdgeKind kind;
  bool blocked = false;  // every collapsed edge is blocked
  std::string via;
};

struct LevelGraph {
  std::vector<LevelNode> nodes;  // sorted by id
  std::vector<LevelEdge> edges;  // sorted by (from, to, kind)
};

namespace detail {

inline std::string point_label(const FlowNode& n) {
  // id is app/component/method#suffix
  auto label = n.id.substr(n.app.size() + n.component.size() + 2);
  if (!n.api.empty()) label += " " + n.api;
  return label;
}

}  // namespace detail

/// Collapses the point graph: at component level points merge into their
/// component, at application level into their app. Terminals are kept; edges
/// that become self-loops are dropped.
inline LevelGraph collapse(const FlowGraph& g, GraphLevel level) {
  auto owner = [&](const FlowNode& n) -> std::string {
    if (n.kind != NodeKind::Point || level == GraphLevel::Point) return n.id;
    if (level == GraphLevel::Component) return component_key(n.app, n.component);
    return n.app;
  };
  std::map<std::string, LevelNode> nodes;
  for (const auto& [id, n] : g.nodes()) {
    const auto key = owner(n);
    if (nodes.count(key)) continue;
    LevelNode ln{key, "", "", n.app, n.component};
    if (n.kind == NodeKind::Source || n.kind == NodeKind::Sink) {
      ln.kind = std::string(to_string(n.kind));
      ln.label = n.channel.empty() ? n.api : n.channel + "\\n" + n.api;
      ln.component.clear();
    } else if (level == GraphLevel::Point) {
      ln.kind = "point";
      ln.label = detail::point_label(n);
    } else if (level == GraphLevel::Component) {
      ln.kind = "component";
      ln.label = n.component;
    } else {
      ln.kind = "app";
      ln.label = n.app;
      ln.component.clear();
    }
    nodes.emplace(key, std::move(ln));
  }

  std::map<std::tuple<std::string, std::string, EdgeKind>, LevelEdge> edges;
  for (const auto& e : g.edges()) {
    auto from = owner(*g.find(e.from));
    auto to = owner(*g.find(e.to));
    if (from == to) continue;
    const bool blocked = e.permission_blocked || e.export_blocked;
    auto key = std::tuple(from, to, e.kind);
    auto it = edges.find(key);
    if (it == edges.end()) {
      edges.emplace(key, LevelEdge{from, to, e.kind, blocked, e.via});
    } else {
      it->second.blocked = it->second.blocked && blocked;
      if (level != GraphLevel::Point && it->second.via != e.via) {
        it->second.via = std::min(it->second.via, e.via);
      }
    }
  }
  LevelGraph out;
  for (auto& [_, n] : nodes) out.nodes.push_back(std::move(n));
  for (auto& [_, e] : edges) out.edges.push_back(std::move(e));
  return out;
}

namespace detail {

inline std::string dot_id(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string dot_node(const LevelNode& n, std::string_view indent) {
  std::string shape = "box";
  if (n.kind == "source") shape = "invhouse";
  if (n.kind == "sink") shape = "house";
  if (n.kind == "app") shape = "component";
  if (n.kind == "point") shape = "ellipse";
  return std::string(indent) + dot_id(n.id) + " [label=" + dot_id(n.label) +
         ", shape=" + shape + ", kind=" + dot_id(n.kind) + "];\n";
}

}  // namespace detail

/// Graphviz text. Nodes are grouped into one cluster per app and, at point
/// level, one sub-cluster per component. Emission order is sorted.
inline std::string to_dot(const FlowGraph& graph, GraphLevel level) {
  const LevelGraph g = collapse(graph, level);
  std::ostringstream out;
  out << "digraph trustflow {\n";
  out << "  rankdir=LR;\n";
  out << "  label=" << detail::dot_id(std::string(to_string(level)) + " level") << ";\n";

  std::map<std::string, std::map<std::string, std::vector<const LevelNode*>>> clustered;
  std::vector<const LevelNode*> loose;
  for (const auto& n : g.nodes) {
    if (n.kind == "source" || n.kind == "sink" || n.kind == "app") {
      loose.push_back(&n);
    } else {
      clustered[n.app][level == GraphLevel::Point ? n.component : std::string()].push_back(&n);
    }
  }
  for (const auto& [app, comps] : clustered) {
    out << "  subgraph " << detail::dot_id("cluster_app_" + app) << " {\n";
    out << "    label=" << detail::dot_id(app) << ";\n";
    for (const auto& [comp, nodes] : comps) {
      if (level == GraphLevel::Point) {
        out << "    subgraph " << detail::dot_id("cluster_component_" + component_key(app, comp))
            << " {\n";
        out << "      label=" << detail::dot_id(comp) << ";\n";
        for (const auto* n : nodes) out << detail::dot_node(*n, "      ");
        out << "    }\n";
      } else {
        for (const auto* n : nodes) out << detail::dot_node(*n, "    ");
      }
    }
    out << "  }\n";
  }
  for (const auto* n : loose) out << detail::dot_node(*n, "  ");

  for (const auto& e : g.edges) {
    out << "  " << detail::dot_id(e.from) << " -> " << detail::dot_id(e.to)
        << " [kind=" << detail::dot_id(to_string(e.kind));
    if (!e.via.empty()) out << ", label=" << detail::dot_id(e.via);
    if (e.blocked) out << ", style=dashed, blocked=\"true\"";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Report document

struct ReportedFlow {
  std::string id;
  std::string source;
  std::string source_channel;
  std::string source_app;
  Criticality criticality = Criticality::Low;
  std::string sink;
  std::string sink_channel;
  std::string sink_app;
  AttackComplexity complexity = AttackComplexity::Medium;
  std::vector<std::string> apps;
  RiskScore risk;
  std::vector<PermissionFinding> permissions;
  std::vector<std::string> witness;

  friend bool operator==(const ReportedFlow&, const ReportedFlow&) = default;
};

struct ReportDigest {
  std::vector<std::string> apps;
  std::string catalog;  // ApiCatalog::digest()
  friend bool operator==(const ReportDigest&, const ReportDigest&) = default;
};

struct ReportStats {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> timings_ms;  // omitted from the document when empty
  friend bool operator==(const ReportStats&, const ReportStats&) = default;
};

struct AnalysisReport {
  ReportDigest digest;
  std::vector<ReportedFlow> critical_flows;  // by descending risk, then source and sink
  ReportStats stats;
  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

/// `scores[i]` and `findings[i]` belong to `flows[i]`.
inline AnalysisReport to_report(std::span<const CriticalFlow> flows,
                                std::span<const RiskScore> scores,
                                std::span<const std::vector<PermissionFinding>> findings,
                                ReportDigest digest, ReportStats stats) {
  AnalysisReport r{std::move(digest), {}, std::move(stats)};
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto& f = flows[i];
    r.critical_flows.push_back({f.key(), f.source_api, f.source_channel, f.source_app,
                                f.criticality, f.sink_api, f.sink_channel, f.sink_app, f.complexity,
                                f.apps, i < scores.size() ? scores[i] : score_flow(f),
                                i < findings.size() ? findings[i] : std::vector<PermissionFinding>{},
                                f.nodes()});
  }
  std::sort(r.critical_flows.begin(), r.critical_flows.end(),
            [](const ReportedFlow& a, const ReportedFlow& b) {
              return std::tuple(-a.risk.risk, a.source, a.sink, a.apps, a.id) <
                     std::tuple(-b.risk.risk, b.source, b.sink, b.apps, b.id);
            });
  return r;
}

inline json risk_model_json() {
  return {{"formula", "risk = impact * probability"},
          {"impact", {{"low", 1}, {"medium", 2}, {"high", 3}}},
          {"probability", {{"very_high", 1}, {"high", 2}, {"medium", 3}}},
          {"labels", {{"low", {1, 2}}, {"medium", {3, 4}}, {"high", {6, 9}}}}};
}

inline json report_to_json(const AnalysisReport& r) {
  json flows = json::array();
  for (const auto& f : r.critical_flows) {
    json perms = json::array();
    for (const auto& p : f.permissions) {
      perms.push_back({{"from", p.from},
                       {"to", p.to},
                       {"caller_app", p.caller_app},
                       {"target_app", p.target_app},
                       {"target_component", p.target_component},
                       {"verdict", to_string(p.verdict)},
                       {"detail", p.detail}});
    }
    flows.push_back({{"id", f.id},
                     {"source", f.source},
                     {"source_channel", f.source_channel},
                     {"source_app", f.source_app},
                     {"criticality", to_string(f.criticality)},
                     {"sink", f.sink},
                     {"sink_channel", f.sink_channel},
                     {"sink_app", f.sink_app},
                     {"attack_complexity", to_string(f.complexity)},
                     {"apps", f.apps},
                     {"risk",
                      {{"impact", f.risk.impact},
                       {"probability", f.risk.probability},
                       {"risk", f.risk.risk},
                       {"label", to_string(f.risk.label)}}},
                     {"permissions", perms},
                     {"witness", f.witness}});
  }
  json stats = json::object();
  for (const auto& [k, v] : r.stats.counts) stats[k] = v;
  if (!r.stats.timings_ms.empty()) stats["timings_ms"] = r.stats.timings_ms;
  return {{"digest",
           {{"apps", r.digest.apps}, {"catalog", r.digest.catalog}, {"risk_model", risk_model_json()}}},
          {"critical_flows", flows},
          {"stats", stats}};
}

inline std::string dump_report(const AnalysisReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline AnalysisReport report_from_json(const json& doc) {
  using namespace detail;
  expect_keys(doc, {"digest", "critical_flows", "stats"}, "report");
  AnalysisReport r;
  const auto& digest = require(doc, "digest", "report");
  expect_keys(digest, {"apps", "catalog", "risk_model"}, "report.digest");
  r.digest.apps = get_string_array(digest, "apps", "report.digest");
  r.digest.catalog = get_string(digest, "catalog", "report.digest");

  const auto& flows = get_array(doc, "critical_flows", "report");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string at = "critical_flows[" + std::to_string(i) + "]";
    const auto& j = flows[i];
    expect_keys(j, {"id", "source", "source_channel", "source_app", "criticality", "sink", "sink_channel",
                    "sink_app", "attack_complexity", "apps", "risk", "permissions", "witness"},
                at);
    ReportedFlow f;
    f.id = get_string(j, "id", at);
    f.source = get_string(j, "source", at);
    f.source_channel = get_string(j, "source_channel", at);
    f.source_app = get_string(j, "source_app", at);
    auto crit = parse_criticality(get_string(j, "criticality", at));
    if (!crit) throw Error(ErrorCode::UnknownLevel, at + ".criticality");
    f.criticality = *crit;
    f.sink = get_string(j, "sink", at);
    f.sink_channel = get_string(j, "sink_channel", at);
    f.sink_app = get_string(j, "sink_app", at);
    auto cx = parse_attack_complexity(get_string(j, "attack_complexity", at));
    if (!cx) throw Error(ErrorCode::UnknownLevel, at + ".attack_complexity");
    f.complexity = *cx;
    f.apps = get_string_array(j, "apps", at);
    const auto& risk = require(j, "risk", at);
    expect_keys(risk, {"impact", "probability", "risk", "label"}, at + ".risk");
    f.risk.impact = static_cast<int>(as_index(require(risk, "impact", at), at + ".risk.impact"));
    f.risk.probability =
        static_cast<int>(as_index(require(risk, "probability", at), at + ".risk.probability"));
    f.risk.risk = static_cast<int>(as_index(require(risk, "risk", at), at + ".risk.risk"));
    const auto label = parse_risk_label(get_string(risk, "label", at));
    if (!label) throw Error(ErrorCode::UnknownLevel, at + ".risk.label");
    f.risk.label = *label;
    if (f.risk != score_levels(f.criticality, f.complexity)) {
      throw Error(ErrorCode::Schema, at + ".risk: does not match criticality and attack complexity");
    }
    for (const auto& p : get_array(j, "permissions", at)) {
      expect_keys(p, {"from", "to", "caller_app", "target_app", "target_component", "verdict", "detail"},
                  at + ".permissions");
      PermissionFinding pf;
      pf.flow = f.id;
      pf.from = get_string(p, "from", at);
      pf.to = get_string(p, "to", at);
      pf.caller_app = get_string(p, "caller_app", at);
      pf.target_app = get_string(p, "target_app", at);
      pf.target_component = get_string(p, "target_component", at);
      auto verdict = parse_permission_verdict(get_string(p, "verdict", at));
      if (!verdict) throw Error(ErrorCode::Schema, at + ".permissions: unknown verdict");
      pf.verdict = *verdict;
      pf.detail = get_string(p, "detail", at);
      f.permissions.push_back(std::move(pf));
    }
    f.witness = get_string_array(j, "witness", at);
    r.critical_flows.push_back(std::move(f));
  }

  const auto& stats = require(doc, "stats", "report");
  expect_object(stats, "report.stats");
  for (const auto& [k, v] : stats.items()) {
    if (k == "timings_ms") {
      expect_object(v, "report.stats.timings_ms");
      for (const auto& [tk, tv] : v.items()) {
        if (!tv.is_number()) throw Error(ErrorCode::Schema, "report.stats.timings_ms." + tk + ": expected a number");
        r.stats.timings_ms[tk] = tv.get<double>();
      }
    } else {
      r.stats.counts[k] = as_index(v, "report.stats." + k);
    }
  }
  return r;
}

inline AnalysisReport parse_report(std::string_view text) {
  return report_from_json(detail::parse_document(text));
}

// ---------------------------------------------------------------------------
// End-user summary

/// One line per critical flow, followed by the partial flows from each later
/// app on the path to the same sink.
inline std::string user_summary(const AnalysisReport& report) {
  if (report.critical_flows.empty()) {
    return "No transitive information flows detected.\n";
  }
  auto chain = [](const std::vector<std::string>& apps, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < apps.size(); ++i) {
      if (i > from) out += " → ";
      out += apps[i];
    }
    return out;
  };
  std::ostringstream out;
  for (const auto& f : report.critical_flows) {
    const auto& source = f.source_channel.empty() ? f.source : f.source_channel;
    const auto& sink = f.sink_channel.empty() ? f.sink : f.sink_channel;
    out << source << " data can reach " << sink << " via " << chain(f.apps, 0) << " (risk "
        << f.risk.risk << ", " << to_string(f.risk.label) << ")\n";
    for (std::size_t i = 1; i < f.apps.size(); ++i) {
      out << "  also: " << chain(f.apps, i) << " → " << sink << "\n";
    }
  }
  return out.str();
}

}  // namespace trustflow
