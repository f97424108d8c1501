#pragma once

// Architectural flow graph. Intra-component flows found by the slicer become
// edges between IPC points; IPC calls are resolved to the entry points of the
// receiving components; per-application graphs are composed into one
// ecosystem graph in which source-to-sink reachability is searched.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "trustflow/app_model.hpp"
#include "trustflow/arch_scan.hpp"
#include "trustflow/catalog.hpp"
#include "trustflow/error.hpp"
#include "trustflow/slicer.hpp"

namespace trustflow {

enum class NodeKind { Point, Source, Sink };
enum class EdgeKind { IntraFlow, Ipc, Source, Sink };

constexpr std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Point: return "point";
    case NodeKind::Source: return "source";
    case NodeKind::Sink: return "sink";
  }
  return "point";
}

constexpr std::string_view to_string(EdgeKind k) noexcept {
  switch (k) {
    case EdgeKind::IntraFlow: return "intra";
    case EdgeKind::Ipc: return "ipc";
    case EdgeKind::Source: return "source";
    case EdgeKind::Sink: return "sink";
  }
  return "intra";
}

struct FlowNode {
  std::string id;
  NodeKind kind = NodeKind::Point;
  std::string app;
  std::string component;  // empty for terminals
  std::optional<PointRole> role;
  std::optional<PointOrigin> origin;
  bool exported = false;  // owning component is exported
  std::string api;        // api name of the point or terminal, if any
  std::string channel;    // terminals only
  std::optional<Criticality> criticality;      // source terminals
  std::optional<AttackComplexity> complexity;  // sink terminals

  friend bool operator==(const FlowNode&, const FlowNode&) = default;
};

struct FlowEdge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::IntraFlow;
  std::string via;  // api name carrying an IPC edge
  bool permission_blocked = false;
  bool export_blocked = false;

  auto operator<=>(const FlowEdge&) const = default;
};

inline std::string source_terminal_id(std::string_view app, std::string_view api) {
  return "source:" + std::string(app) + ":" + std::string(api);
}

inline std::string sink_terminal_id(std::string_view app, std::string_view api) {
  return "sink:" + std::string(app) + ":" + std::string(api);
}

class FlowGraph {
 public:
  /// Nodes are keyed by id; adding an existing id keeps the first node.
  void add_node(FlowNode node) {
    auto id = node.id;
    nodes_.emplace(std::move(id), std::move(node));
  }

  /// Throws Error(DanglingFlow) when an endpoint is not a node of the graph.
  void add_edge(FlowEdge edge) {
    if (!nodes_.count(edge.from) || !nodes_.count(edge.to)) {
      throw Error(ErrorCode::DanglingFlow, edge.from + " -> " + edge.to);
    }
    edges_.insert(std::move(edge));
  }

  const FlowNode* find(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, FlowNode, std::less<>>& nodes() const { return nodes_; }
  const std::set<FlowEdge>& edges() const { return edges_; }

  bool has_edge(std::string_view from, std::string_view to) const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [&](const FlowEdge& e) { return e.from == from && e.to == to; });
  }

  void merge(const FlowGraph& other) {
    for (const auto& [id, node] : other.nodes_) add_node(node);
    for (const auto& e : other.edges_) edges_.insert(e);
  }

  /// Outgoing edges per node, each list ordered by (to, kind, via).
  std::map<std::string_view, std::vector<const FlowEdge*>> out_edges() const {
    std::map<std::string_view, std::vector<const FlowEdge*>> adj;
    for (const auto& e : edges_) adj[e.from].push_back(&e);
    for (auto& [_, list] : adj) {
      std::sort(list.begin(), list.end(), [](const FlowEdge* a, const FlowEdge* b) {
        return std::tie(a->to, a->kind, a->via) < std::tie(b->to, b->kind, b->via);
      });
    }
    return adj;
  }

  /// Line-oriented, sorted dump for tests and diffs.
  std::string dump() const {
    std::ostringstream out;
    for (const auto& [id, n] : nodes_) {
      out << "node " << id << " kind=" << to_string(n.kind) << " app=" << n.app;
      if (!n.component.empty()) out << " component=" << n.component;
      if (n.origin) out << " origin=" << to_string(*n.origin);
      if (!n.api.empty()) out << " api=" << n.api;
      out << "\n";
    }
    for (const auto& e : edges_) {
      out << "edge " << e.from << " -> " << e.to << " kind=" << to_string(e.kind);
      if (!e.via.empty()) out << " via=" << e.via;
      if (e.permission_blocked) out << " permission-blocked";
      if (e.export_blocked) out << " export-blocked";
      out << "\n";
    }
    return out.str();
  }

  friend bool operator==(const FlowGraph&, const FlowGraph&) = default;

 private:
  std::map<std::string, FlowNode, std::less<>> nodes_;
  std::set<FlowEdge> edges_;
};

// ---------------------------------------------------------------------------

/// Point nodes of every component of `app`, one IntraFlow edge per slicer
/// flow, and source/sink terminals (one per app and api name) attached to
/// source entries and sink exits. Flows of other apps are ignored.
inline FlowGraph build_component_flow_graph(const AppBundle& app, const ExchangeDocument& exchange,
                                            std::span<const IntraFlow> flows,
                                            const ApiCatalog& catalog) {
  FlowGraph g;
  for (const auto& ec : exchange.components) {
    if (ec.app != app.app_id) continue;
    const Component* comp = app.find_component(ec.name);
    for (const auto& p : ec.points) {
      FlowNode n;
      n.id = p.id;
      n.kind = NodeKind::Point;
      n.app = p.app;
      n.component = p.component;
      n.role = p.role;
      n.origin = p.origin;
      n.exported = comp != nullptr && comp->exported;
      n.api = p.api_name.value_or("");
      g.add_node(std::move(n));

      if (p.origin == PointOrigin::SourceApi && p.api_name) {
        const auto* cls = std::get_if<api::Source>(&catalog.classify(*p.api_name));
        if (cls == nullptr) {
          throw Error(ErrorCode::Schema, p.id + ": \"" + *p.api_name + "\" is not a catalog source");
        }
        FlowNode t;
        t.id = source_terminal_id(p.app, *p.api_name);
        t.kind = NodeKind::Source;
        t.app = p.app;
        t.api = *p.api_name;
        t.channel = cls->channel;
        t.criticality = cls->criticality;
        g.add_node(std::move(t));
        g.add_edge({source_terminal_id(p.app, *p.api_name), p.id, EdgeKind::Source, "", false, false});
      } else if (p.origin == PointOrigin::SinkApi && p.api_name) {
        const auto* cls = std::get_if<api::Sink>(&catalog.classify(*p.api_name));
        if (cls == nullptr) {
          throw Error(ErrorCode::Schema, p.id + ": \"" + *p.api_name + "\" is not a catalog sink");
        }
        FlowNode t;
        t.id = sink_terminal_id(p.app, *p.api_name);
        t.kind = NodeKind::Sink;
        t.app = p.app;
        t.api = *p.api_name;
        t.channel = cls->channel;
        t.complexity = cls->complexity;
        g.add_node(std::move(t));
        g.add_edge({p.id, sink_terminal_id(p.app, *p.api_name), EdgeKind::Sink, "", false, false});
      }
    }
  }
  for (const auto& f : flows) {
    if (f.app != app.app_id) continue;
    const FlowNode* from = g.find(f.from);
    const FlowNode* to = g.find(f.to);
    if (from == nullptr || to == nullptr || from->role != PointRole::Entry ||
        to->role != PointRole::Exit) {
      throw Error(ErrorCode::DanglingFlow, f.from + " -> " + f.to);
    }
    g.add_edge({f.from, f.to, EdgeKind::IntraFlow, "", false, false});
  }
  return g;
}

// ---------------------------------------------------------------------------
// IPC resolution

struct IpcTarget {
  std::string entry;  // entry point id
  std::string app;
  std::string component;
  bool permission_blocked = false;
  bool export_blocked = false;
  friend bool operator==(const IpcTarget&, const IpcTarget&) = default;
};

struct IpcResolution {
  std::vector<IpcTarget> targets;  // ordered by (app, component, entry)
  std::vector<std::string> errors;
};

/// Whether `caller` may reach `target`: the target's required permission must
/// be held and, across apps, the target must be exported. A shared user id
/// lifts both checks.
inline std::pair<bool, bool> ipc_blocking(const AppBundle& caller, const AppBundle& target_app,
                                          const Component& target) {
  const bool shared = shares_user_id(caller, target_app);
  const bool permission_blocked =
      target.required_permission && !caller.holds(*target.required_permission) && !shared;
  const bool export_blocked = caller.app_id != target_app.app_id && !target.exported && !shared;
  return {permission_blocked, export_blocked};
}

/// Components that may receive the message of an IPC-out exit point.
/// A target literal of the form "app/Component" always resolves explicitly;
/// any other literal is an action matched against intent filters, restricted
/// to broadcast receivers for broadcast mechanisms.
inline IpcResolution resolve_ipc(const IpcPoint& exit, const ComponentIndex& index,
                                 const ExchangeDocument& exchange, const ApiCatalog& catalog) {
  IpcResolution out;
  if (exit.role != PointRole::Exit || exit.origin != PointOrigin::IpcOutApi || !exit.api_name) {
    out.errors.push_back(exit.id + ": not an IPC exit point");
    return out;
  }
  const auto* ipc = std::get_if<api::IpcOut>(&catalog.classify(*exit.api_name));
  if (ipc == nullptr) {
    out.errors.push_back(exit.id + ": \"" + *exit.api_name + "\" is not a catalog IPC mechanism");
    return out;
  }
  const AppBundle* caller = index.find_app(exit.app);
  if (caller == nullptr) {
    out.errors.push_back(exit.id + ": unknown calling app \"" + exit.app + "\"");
    return out;
  }
  if (!exit.target || exit.target->empty()) {
    out.errors.push_back(exit.id + ": no target literal");
    return out;
  }

  std::vector<const ComponentRef*> receivers;
  const std::string& target = *exit.target;
  if (auto slash = target.find('/'); slash != std::string::npos) {
    const ComponentRef* ref = index.find(target.substr(0, slash), target.substr(slash + 1));
    if (ref == nullptr) {
      out.errors.push_back(exit.id + ": explicit target \"" + target + "\" does not exist");
      return out;
    }
    receivers.push_back(ref);
  } else {
    for (const auto& ref : index.components()) {
      if (ipc->resolution == Resolution::Broadcast &&
          ref.component->kind != ComponentKind::BroadcastReceiver) {
        continue;
      }
      const auto& filters = ref.component->intent_filters;
      if (std::find(filters.begin(), filters.end(), target) != filters.end()) {
        receivers.push_back(&ref);
      }
    }
  }

  for (const ComponentRef* ref : receivers) {
    if (ref->app_id() == exit.app && ref->name() == exit.component) continue;
    const ExchangeComponent* ec = exchange.find(ref->app_id(), ref->name());
    if (ec == nullptr) continue;
    const auto [permission_blocked, export_blocked] =
        ipc_blocking(*caller, *ref->app, *ref->component);
    for (const auto& p : ec->points) {
      if (p.role != PointRole::Entry) continue;
      const bool receives = ipc->delivers_to
                                ? (p.origin == PointOrigin::IpcInApi && p.api_name == ipc->delivers_to)
                                : p.origin == PointOrigin::Lifecycle;
      if (receives) {
        out.targets.push_back(
            {p.id, ref->app_id(), ref->name(), permission_blocked, export_blocked});
      }
    }
  }
  std::sort(out.targets.begin(), out.targets.end(), [](const IpcTarget& a, const IpcTarget& b) {
    return std::tie(a.app, a.component, a.entry) < std::tie(b.app, b.component, b.entry);
  });
  return out;
}

/// Shared-storage coupling: a sink exit writing to literal target `u` feeds
/// every source entry of the same channel reading the same literal `u` in
/// another component. No URI pattern semantics.
inline std::vector<FlowEdge> couple_storage(const ExchangeDocument& exchange,
                                            const ApiCatalog& catalog) {
  struct Reader {
    const IpcPoint* point;
    std::string channel;
  };
  std::vector<Reader> readers;
  for (const auto& ec : exchange.components) {
    for (const auto& p : ec.points) {
      if (p.origin != PointOrigin::SourceApi || !p.api_name || !p.target) continue;
      if (const auto* s = std::get_if<api::Source>(&catalog.classify(*p.api_name))) {
        readers.push_back({&p, s->channel});
      }
    }
  }
  std::vector<FlowEdge> out;
  for (const auto& ec : exchange.components) {
    for (const auto& p : ec.points) {
      if (p.origin != PointOrigin::SinkApi || !p.api_name || !p.target) continue;
      const auto* sink = std::get_if<api::Sink>(&catalog.classify(*p.api_name));
      if (sink == nullptr) continue;
      for (const auto& r : readers) {
        if (r.channel != sink->channel || *r.point->target != *p.target) continue;
        if (r.point->app == p.app && r.point->component == p.component) continue;
        out.push_back({p.id, r.point->id, EdgeKind::Ipc, *p.api_name, false, false});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// IPC edges for every IPC-out exit of the ecosystem plus storage coupling.
/// Resolution problems are appended to `errors`.
inline std::vector<FlowEdge> resolve_all_ipc(const ComponentIndex& index,
                                             const ExchangeDocument& exchange,
                                             const ApiCatalog& catalog,
                                             std::vector<std::string>* errors = nullptr) {
  std::vector<FlowEdge> out;
  for (const auto& ec : exchange.components) {
    for (const auto& p : ec.points) {
      if (p.role != PointRole::Exit || p.origin != PointOrigin::IpcOutApi) continue;
      auto res = resolve_ipc(p, index, exchange, catalog);
      for (const auto& t : res.targets) {
        out.push_back({p.id, t.entry, EdgeKind::Ipc, p.api_name.value_or(""), t.permission_blocked,
                       t.export_blocked});
      }
      if (errors != nullptr) {
        errors->insert(errors->end(), res.errors.begin(), res.errors.end());
      }
    }
  }
  auto storage = couple_storage(exchange, catalog);
  out.insert(out.end(), storage.begin(), storage.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Union of the per-app graphs plus the resolved IPC edges. Blocked edges stay
/// in the graph with their marks.
inline FlowGraph compose_ecosystem(std::span<const FlowGraph> graphs,
                                   std::span<const FlowEdge> ipc_edges) {
  FlowGraph out;
  for (const auto& g : graphs) out.merge(g);
  for (const auto& e : ipc_edges) out.add_edge(e);
  return out;
}

// ---------------------------------------------------------------------------
// Application flows

struct AppFlow {
  std::string app;
  std::string from;  // entry through which data enters the app
  std::string to;    // exit through which it leaves
  auto operator<=>(const AppFlow&) const = default;
};

namespace detail {

/// Nodes numbered in id order with outgoing edges in edge order, so searches
/// run over integers instead of string keys.
struct IndexedGraph {
  std::vector<const FlowNode*> node;
  std::vector<int> app;  // dense app number per node
  std::vector<std::vector<std::pair<int, const FlowEdge*>>> out;

  explicit IndexedGraph(const FlowGraph& graph) {
    std::vector<std::string_view> ids;
    std::map<std::string_view, int> apps;
    for (const auto& [id, n] : graph.nodes()) {
      ids.push_back(id);
      node.push_back(&n);
      app.push_back(apps.emplace(n.app, static_cast<int>(apps.size())).first->second);
    }
    out.resize(node.size());
    for (const auto& e : graph.edges()) {
      const auto from = std::lower_bound(ids.begin(), ids.end(), std::string_view(e.from)) - ids.begin();
      const auto to = std::lower_bound(ids.begin(), ids.end(), std::string_view(e.to)) - ids.begin();
      out[from].emplace_back(static_cast<int>(to), &e);
    }
  }

  int size() const { return static_cast<int>(node.size()); }
};

inline std::vector<AppFlow> application_flows(const IndexedGraph& g, std::string_view app) {
  const int n = g.size();
  std::vector<char> in_app(n), entered(n), out_any(n), out_external(n);
  for (int u = 0; u < n; ++u) in_app[u] = g.node[u]->app == app;
  std::vector<std::vector<int>> adj(n);
  for (int u = 0; u < n; ++u) {
    for (const auto& [v, e] : g.out[u]) {
      if (!in_app[u] && !in_app[v]) continue;
      if (in_app[v] && (e->kind == EdgeKind::Source || (e->kind == EdgeKind::Ipc && !in_app[u]))) entered[v] = 1;
      if (in_app[u] && e->kind == EdgeKind::Ipc) {
        out_any[u] = 1;
        if (!in_app[v]) out_external[u] = 1;
      }
      if ((e->kind == EdgeKind::IntraFlow || e->kind == EdgeKind::Ipc) && in_app[u] && in_app[v]) {
        adj[u].push_back(v);
      }
    }
  }

  std::vector<char> exit(n);
  std::vector<int> entries;
  for (int u = 0; u < n; ++u) {
    const FlowNode& p = *g.node[u];
    if (p.kind != NodeKind::Point || !in_app[u]) continue;
    if (p.role == PointRole::Entry) {
      const bool external = p.origin == PointOrigin::SourceApi || p.origin == PointOrigin::IpcInApi ||
                            (p.origin == PointOrigin::Lifecycle && p.exported) || entered[u];
      if (external) entries.push_back(u);
    } else {
      exit[u] = p.origin == PointOrigin::SinkApi ||
                (p.origin == PointOrigin::IpcOutApi && (out_external[u] || !out_any[u]));
    }
  }

  std::vector<AppFlow> out;
  std::vector<int> seen(n, -1);
  std::vector<int> queue;
  for (int entry : entries) {
    queue.assign(1, entry);
    seen[entry] = entry;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (int v : adj[queue[head]]) {
        if (seen[v] == entry) continue;
        seen[v] = entry;
        queue.push_back(v);
      }
    }
    for (int v : queue) {
      if (v != entry && exit[v]) out.push_back({std::string(app), g.node[entry]->id, g.node[v]->id});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Flows through one application: reachability over intra-component and
/// intra-app IPC edges from entries that connect to the outside (source calls,
/// IPC-in calls, exported lifecycle methods, targets of other apps) to exits
/// that leave it (sink calls, IPC reaching other apps or unresolved).
inline std::vector<AppFlow> application_flows(const FlowGraph& graph, std::string_view app) {
  return detail::application_flows(detail::IndexedGraph(graph), app);
}

// ---------------------------------------------------------------------------
// Critical flows

struct CriticalFlow {
  std::string source_id;
  std::string source_api;
  std::string source_channel;
  std::string source_app;
  Criticality criticality = Criticality::Low;

  std::string sink_id;
  std::string sink_api;
  std::string sink_channel;
  std::string sink_app;
  AttackComplexity complexity = AttackComplexity::Medium;

  std::vector<FlowEdge> path;     // source terminal ... sink terminal
  std::vector<std::string> apps;  // apps along the path, consecutive repeats collapsed

  std::string key() const { return source_id + " -> " + sink_id; }

  std::vector<std::string> nodes() const {
    std::vector<std::string> out;
    if (path.empty()) return out;
    out.push_back(path.front().from);
    for (const auto& e : path) out.push_back(e.to);
    return out;
  }

  bool transitive() const { return apps.size() > 1; }

  friend bool operator==(const CriticalFlow&, const CriticalFlow&) = default;
};

/// One flow per (source terminal, sink terminal) pair connected in the graph,
/// with a BFS-shortest witness path. Blocked IPC edges are traversed.
inline std::vector<CriticalFlow> critical_flows(const FlowGraph& graph) {
  const detail::IndexedGraph g(graph);
  const int n = g.size();
  std::vector<CriticalFlow> out;
  std::vector<int> seen(n, -1);
  std::vector<const FlowEdge*> parent(n);
  std::vector<int> parent_node(n);
  std::vector<int> queue;
  for (int s = 0; s < n; ++s) {
    const FlowNode& src = *g.node[s];
    if (src.kind != NodeKind::Source) continue;
    queue.assign(1, s);
    seen[s] = s;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (const auto& [v, e] : g.out[u]) {
        if (seen[v] == s) continue;
        seen[v] = s;
        parent[v] = e;
        parent_node[v] = u;
        queue.push_back(v);
      }
    }
    for (int t : queue) {
      const FlowNode& sink = *g.node[t];
      if (sink.kind != NodeKind::Sink) continue;
      CriticalFlow f;
      f.source_id = src.id;
      f.source_api = src.api;
      f.source_channel = src.channel;
      f.source_app = src.app;
      f.criticality = src.criticality.value_or(Criticality::Low);
      f.sink_id = sink.id;
      f.sink_api = sink.api;
      f.sink_channel = sink.channel;
      f.sink_app = sink.app;
      f.complexity = sink.complexity.value_or(AttackComplexity::Medium);
      std::vector<int> chain{t};
      for (int v = t; v != s; v = parent_node[v]) {
        f.path.push_back(*parent[v]);
        chain.push_back(parent_node[v]);
      }
      std::reverse(f.path.begin(), f.path.end());
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const auto& app = g.node[*it]->app;
        if (f.apps.empty() || f.apps.back() != app) f.apps.push_back(app);
      }
      out.push_back(std::move(f));
    }
  }
  std::sort(out.begin(), out.end(), [](const CriticalFlow& a, const CriticalFlow& b) {
    return std::tie(a.source_api, a.sink_api, a.apps, a.source_id, a.sink_id) <
           std::tie(b.source_api, b.sink_api, b.apps, b.source_id, b.sink_id);
  });
  return out;
}

}  // namespace trustflow
