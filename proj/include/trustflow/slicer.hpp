#pragma once

// IR layer. Builds a per-component dependence graph and runs backward slices
// from exit points to find which entry points can influence them.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trustflow/app_model.hpp"
#include "trustflow/arch_scan.hpp"
#include "trustflow/error.hpp"
#include "trustflow/json_util.hpp"

namespace trustflow {

using NodeId = std::uint32_t;

enum class DepEdgeKind { Data, ArgToParam, ReturnToCall };

struct DepNode {
  std::uint32_t method = 0;
  bool is_param = false;
  std::uint32_t slot = 0;  // parameter position or statement index
};

struct DepEdge {
  NodeId to;
  DepEdgeKind kind;
  friend bool operator==(const DepEdge&, const DepEdge&) = default;
};

/// Nodes are laid out method by method (declaration order): parameters first,
/// then statements. Edges point from a node to the nodes it depends on.
class DependenceGraph {
 public:
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& d : deps_) n += d.size();
    return n;
  }

  const DepNode& node(NodeId id) const { return nodes_[id]; }
  std::span<const DepEdge> dependencies(NodeId id) const { return deps_[id]; }

  std::optional<std::uint32_t> method_index(std::string_view name) const {
    auto it = method_by_name_.find(std::string(name));
    if (it == method_by_name_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t method_count() const { return methods_.size(); }

  NodeId param_node(std::uint32_t method, std::uint32_t k) const {
    return methods_[method].base + k;
  }
  NodeId statement_node(std::uint32_t method, std::uint32_t index) const {
    return methods_[method].base + methods_[method].param_count + index;
  }
  std::uint32_t param_count(std::uint32_t method) const { return methods_[method].param_count; }
  const std::string& param_name(std::uint32_t method, std::uint32_t k) const {
    return methods_[method].params[k];
  }
  std::uint32_t statement_count(std::uint32_t method) const {
    return methods_[method].statement_count;
  }

  std::string label(NodeId id) const {
    const auto& n = nodes_[id];
    const auto& m = methods_[n.method];
    if (n.is_param) return m.name + "(" + m.params[n.slot] + ")";
    return m.name + "#" + std::to_string(n.slot);
  }

 private:
  struct MethodInfo {
    std::string name;
    std::vector<std::string> params;
    NodeId base = 0;
    std::uint32_t param_count = 0;
    std::uint32_t statement_count = 0;
  };

  friend DependenceGraph build_dependence(const Component& comp);

  std::vector<DepNode> nodes_;
  std::vector<std::vector<DepEdge>> deps_;
  std::vector<MethodInfo> methods_;
  std::unordered_map<std::string, std::uint32_t> method_by_name_;
};

/// One node per parameter and statement. Every use resolves to the most recent
/// definition at or before it (falling back to a parameter). Calls bind each
/// argument to the callee parameter and the callee's return value (its last
/// definition of `ret`) to the call's definition. Call binding is context
/// insensitive.
inline DependenceGraph build_dependence(const Component& comp) {
  DependenceGraph g;
  for (std::uint32_t m = 0; m < comp.methods.size(); ++m) {
    const auto& method = comp.methods[m];
    DependenceGraph::MethodInfo info;
    info.name = method.name;
    info.params = method.params;
    info.base = static_cast<NodeId>(g.nodes_.size());
    info.param_count = static_cast<std::uint32_t>(method.params.size());
    info.statement_count = static_cast<std::uint32_t>(method.body.size());
    for (std::uint32_t k = 0; k < info.param_count; ++k) g.nodes_.push_back({m, true, k});
    for (std::uint32_t i = 0; i < info.statement_count; ++i) g.nodes_.push_back({m, false, i});
    g.method_by_name_.emplace(method.name, m);
    g.methods_.push_back(std::move(info));
  }
  g.deps_.resize(g.nodes_.size());

  constexpr NodeId kNone = std::numeric_limits<NodeId>::max();
  // resolved[node] = dependency of each use, aligned with Statement::uses().
  std::vector<std::vector<NodeId>> resolved(g.nodes_.size());
  std::vector<NodeId> return_node(comp.methods.size(), kNone);

  for (std::uint32_t m = 0; m < comp.methods.size(); ++m) {
    const auto& method = comp.methods[m];
    std::unordered_map<std::string_view, NodeId> current;
    for (std::uint32_t k = 0; k < method.params.size(); ++k) {
      current[method.params[k]] = g.param_node(m, k);
    }
    for (std::uint32_t i = 0; i < method.body.size(); ++i) {
      const auto& stmt = method.body[i];
      const NodeId self = g.statement_node(m, i);
      const std::string* def = stmt.def();
      auto& res = resolved[self];
      for (const auto& use : stmt.uses()) {
        NodeId target = kNone;
        if (auto it = current.find(use); it != current.end()) {
          target = it->second;
        } else if (def != nullptr && *def == use) {
          target = self;
        }
        res.push_back(target);
        if (target != kNone) g.deps_[self].push_back({target, DepEdgeKind::Data});
      }
      if (def != nullptr) current[*def] = self;
    }
    if (auto it = current.find(kReturnVariable); it != current.end()) {
      return_node[m] = it->second;
    }
  }

  for (std::uint32_t m = 0; m < comp.methods.size(); ++m) {
    const auto& method = comp.methods[m];
    for (std::uint32_t i = 0; i < method.body.size(); ++i) {
      const CallStmt* call = method.body[i].call();
      if (call == nullptr) continue;
      auto callee = g.method_index(call->callee);
      if (!callee) continue;
      const NodeId self = g.statement_node(m, i);
      const auto& res = resolved[self];
      const auto bound = std::min<std::size_t>(call->args.size(), g.param_count(*callee));
      for (std::uint32_t k = 0; k < bound; ++k) {
        if (res[k] != kNone) {
          g.deps_[g.param_node(*callee, k)].push_back({res[k], DepEdgeKind::ArgToParam});
        }
      }
      if (call->def && return_node[*callee] != kNone) {
        g.deps_[self].push_back({return_node[*callee], DepEdgeKind::ReturnToCall});
      }
    }
  }

  for (auto& d : g.deps_) {
    std::sort(d.begin(), d.end(), [](const DepEdge& a, const DepEdge& b) {
      return std::pair(a.to, a.kind) < std::pair(b.to, b.kind);
    });
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  return g;
}

struct SliceStats {
  std::size_t edges_visited = 0;
  std::size_t nodes_expanded = 0;
};

namespace detail {

inline NodeId exit_node(const DependenceGraph& graph, const IpcPoint& exit) {
  if (exit.role != PointRole::Exit || !exit.statement_index) {
    throw Error(ErrorCode::UnknownExit, exit.id);
  }
  auto m = graph.method_index(exit.method);
  if (!m || *exit.statement_index >= graph.statement_count(*m)) {
    throw Error(ErrorCode::UnknownExit, exit.id);
  }
  return graph.statement_node(*m, static_cast<std::uint32_t>(*exit.statement_index));
}

struct BackwardSearch {
  static constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> distance;
  std::vector<NodeId> parent;  // next node towards the exit
};

// BFS along dependencies; each node is expanded once, so each edge is examined
// at most once.
inline BackwardSearch search_from(const DependenceGraph& graph, NodeId start, SliceStats* stats) {
  BackwardSearch s;
  s.distance.assign(graph.node_count(), BackwardSearch::kUnreached);
  s.parent.assign(graph.node_count(), start);
  std::deque<NodeId> queue{start};
  s.distance[start] = 0;
  bool start_in_slice = false;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (stats) ++stats->nodes_expanded;
    for (const auto& e : graph.dependencies(u)) {
      if (stats) ++stats->edges_visited;
      if (e.to == start) start_in_slice = true;
      if (s.distance[e.to] != BackwardSearch::kUnreached) continue;
      s.distance[e.to] = s.distance[u] + 1;
      s.parent[e.to] = u;
      queue.push_back(e.to);
    }
  }
  // Distance 0 marks the exit itself; keep it distinguishable from "reached
  // through a cycle", which only matters for slice membership.
  if (!start_in_slice) s.distance[start] = BackwardSearch::kUnreached;
  return s;
}

}  // namespace detail

/// Nodes backward-reachable from the exit statement's used variables, sorted.
/// The exit statement itself is included only when a recursive cycle leads
/// back to it. Throws Error(UnknownExit) when `exit` is not an exit of this graph.
inline std::vector<NodeId> backward_slice(const DependenceGraph& graph, const IpcPoint& exit,
                                          SliceStats* stats = nullptr) {
  const NodeId start = detail::exit_node(graph, exit);
  const auto search = detail::search_from(graph, start, stats);
  std::vector<NodeId> out;
  for (NodeId n = 0; n < graph.node_count(); ++n) {
    if (search.distance[n] != detail::BackwardSearch::kUnreached) out.push_back(n);
  }
  return out;
}

/// Nodes at which the data carried by `entry` is defined.
inline std::vector<NodeId> entry_anchors(const DependenceGraph& graph, const IpcPoint& entry) {
  std::vector<NodeId> out;
  auto m = graph.method_index(entry.method);
  if (!m || entry.role != PointRole::Entry) return out;
  if (entry.origin == PointOrigin::Lifecycle) {
    for (std::uint32_t k = 0; k < graph.param_count(*m); ++k) {
      const auto& param = graph.param_name(*m, k);
      if (std::find(entry.variables.begin(), entry.variables.end(), param) !=
          entry.variables.end()) {
        out.push_back(graph.param_node(*m, k));
      }
    }
    for (auto idx : entry.folded) {
      if (idx < graph.statement_count(*m)) {
        out.push_back(graph.statement_node(*m, static_cast<std::uint32_t>(idx)));
      }
    }
  } else if (entry.statement_index && *entry.statement_index < graph.statement_count(*m)) {
    out.push_back(graph.statement_node(*m, static_cast<std::uint32_t>(*entry.statement_index)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct IntraFlow {
  std::string app;
  std::string component;
  std::string from;  // entry point id
  std::string to;    // exit point id
  std::vector<std::string> witness;  // node labels, entry anchor first, exit statement last

  friend bool operator==(const IntraFlow&, const IntraFlow&) = default;
};

namespace detail {

/// Entry sets as bit rows: row `r` spans `words` 64-bit words.
struct EntryBits {
  std::size_t words = 1;
  std::vector<std::uint64_t> bits;

  std::uint64_t* row(std::size_t r) { return bits.data() + r * words; }
  const std::uint64_t* row(std::size_t r) const { return bits.data() + r * words; }
};

/// For every node, the entries with an anchor reachable from it along
/// dependencies (the node itself included). One pass of Tarjan's algorithm:
/// components are completed after everything they depend on, so each row is
/// final when its component closes. Returns per-node component ids in `comp_of`.
inline EntryBits entry_reach(const DependenceGraph& graph,
                             const std::vector<std::vector<std::uint32_t>>& anchored,
                             std::size_t entry_count, std::vector<std::uint32_t>& comp_of) {
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  const std::size_t n = graph.node_count();
  EntryBits reach;
  reach.words = std::max<std::size_t>(1, (entry_count + 63) / 64);
  comp_of.assign(n, kUnset);

  std::vector<std::uint32_t> index(n, kUnset), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<NodeId> stack;
  std::vector<std::pair<NodeId, std::uint32_t>> calls;
  std::uint32_t counter = 0, comps = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    calls.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!calls.empty()) {
      auto& [v, next] = calls.back();
      const auto deps = graph.dependencies(v);
      if (next < deps.size()) {
        const NodeId w = deps[next++].to;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const NodeId done = v;
      calls.pop_back();
      if (!calls.empty()) low[calls.back().first] = std::min(low[calls.back().first], low[done]);
      if (low[done] != index[done]) continue;

      const std::uint32_t c = comps++;
      reach.bits.resize(static_cast<std::size_t>(comps) * reach.words, 0);
      std::size_t top = stack.size();
      while (true) {
        const NodeId w = stack[--top];
        on_stack[w] = 0;
        comp_of[w] = c;
        if (w == done) break;
      }
      std::uint64_t* row = reach.row(c);
      for (std::size_t k = top; k < stack.size(); ++k) {
        const NodeId w = stack[k];
        for (auto e : anchored[w]) row[e / 64] |= std::uint64_t{1} << (e % 64);
        for (const auto& d : graph.dependencies(w)) {
          const std::uint32_t dc = comp_of[d.to];
          if (dc == c) continue;
          const std::uint64_t* other = reach.row(dc);
          for (std::size_t i = 0; i < reach.words; ++i) row[i] |= other[i];
        }
      }
      stack.resize(top);
    }
  }
  return reach;
}

/// Position of each point's id in sorted order; equal ids share a rank.
inline std::vector<std::uint32_t> id_ranks(std::span<const IpcPoint> points) {
  std::vector<std::uint32_t> idx(points.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return points[a].id < points[b].id; });
  std::vector<std::uint32_t> rank(points.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) {
    rank[idx[i]] = i > 0 && points[idx[i]].id == points[idx[i - 1]].id ? rank[idx[i - 1]] : i;
  }
  return rank;
}

}  // namespace detail

/// One flow per (entry, exit) pair whose backward slice from the exit reaches
/// a node where the entry's data is defined. The witness is a BFS-shortest
/// path; ties go to the lowest node (earliest method, then statement index).
///
/// Which entries reach an exit is known up front from `entry_reach`, so the
/// backward search from each exit stops after the level at which the last of
/// them is found.
inline std::vector<IntraFlow> intra_component_flows(const DependenceGraph& graph,
                                                    std::span<const IpcPoint> entries,
                                                    std::span<const IpcPoint> exits) {
  constexpr std::uint32_t kUnreached = detail::BackwardSearch::kUnreached;
  std::vector<IntraFlow> flows;
  if (entries.empty() || exits.empty()) return flows;

  const std::size_t n = graph.node_count();
  std::vector<std::vector<std::uint32_t>> anchored(n);
  for (std::uint32_t e = 0; e < entries.size(); ++e) {
    for (NodeId a : entry_anchors(graph, entries[e])) anchored[a].push_back(e);
  }
  std::vector<std::uint32_t> comp_of;
  const auto reach = detail::entry_reach(graph, anchored, entries.size(), comp_of);

  std::vector<std::uint32_t> distance(n, kUnreached);
  std::vector<NodeId> parent(n, 0);
  std::vector<NodeId> touched, frontier, next;
  std::vector<std::uint64_t> wanted(reach.words);
  std::vector<std::uint32_t> best_distance(entries.size(), kUnreached);
  std::vector<NodeId> best(entries.size(), 0);
  std::vector<std::uint32_t> found_entries;

  std::vector<std::string> labels(n);
  const auto label_of = [&](NodeId v) -> const std::string& {
    if (labels[v].empty()) labels[v] = graph.label(v);
    return labels[v];
  };
  const auto entry_rank = detail::id_ranks(entries);
  const auto exit_rank = detail::id_ranks(exits);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> order;

  for (std::size_t x = 0; x < exits.size(); ++x) {
    const auto& exit = exits[x];
    const NodeId start = detail::exit_node(graph, exit);
    std::fill(wanted.begin(), wanted.end(), 0);
    for (const auto& d : graph.dependencies(start)) {
      const std::uint64_t* row = reach.row(comp_of[d.to]);
      for (std::size_t i = 0; i < reach.words; ++i) wanted[i] |= row[i];
    }
    std::size_t remaining = 0;
    for (auto w : wanted) remaining += static_cast<std::size_t>(std::popcount(w));
    if (remaining == 0) continue;

    distance[start] = 0;
    touched.assign(1, start);
    frontier.assign(1, start);
    found_entries.clear();
    for (std::uint32_t level = 1; remaining > 0 && !frontier.empty(); ++level) {
      next.clear();
      for (NodeId u : frontier) {
        for (const auto& d : graph.dependencies(u)) {
          if (distance[d.to] != kUnreached) continue;
          distance[d.to] = level;
          parent[d.to] = u;
          next.push_back(d.to);
          touched.push_back(d.to);
        }
      }
      std::size_t newly = 0;
      for (NodeId w : next) {
        for (auto e : anchored[w]) {
          if (!(wanted[e / 64] >> (e % 64) & 1)) continue;
          if (best_distance[e] == kUnreached) {
            best_distance[e] = level;
            best[e] = w;
            found_entries.push_back(e);
            ++newly;
          } else if (best_distance[e] == level && w < best[e]) {
            best[e] = w;
          }
        }
      }
      remaining -= std::min(remaining, newly);
      frontier.swap(next);
    }

    std::sort(found_entries.begin(), found_entries.end());
    for (auto e : found_entries) {
      IntraFlow flow{exit.app, exit.component, entries[e].id, exit.id, {}};
      flow.witness.reserve(best_distance[e] + 1);
      for (NodeId v = best[e]; v != start; v = parent[v]) flow.witness.push_back(label_of(v));
      flow.witness.push_back(label_of(start));
      flows.push_back(std::move(flow));
      order.emplace_back(entry_rank[e], exit_rank[x]);
      best_distance[e] = kUnreached;
    }
    for (NodeId v : touched) distance[v] = kUnreached;
  }

  std::vector<std::uint32_t> perm(flows.size());
  for (std::uint32_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::tie(order[a], a) < std::tie(order[b], b);
  });
  std::vector<IntraFlow> sorted;
  sorted.reserve(flows.size());
  for (auto i : perm) sorted.push_back(std::move(flows[i]));
  return sorted;
}

inline std::vector<IntraFlow> intra_component_flows(const Component& comp,
                                                    std::span<const IpcPoint> entries,
                                                    std::span<const IpcPoint> exits) {
  return intra_component_flows(build_dependence(comp), entries, exits);
}

// ---------------------------------------------------------------------------
// Flow document

struct FlowDocument {
  std::vector<IntraFlow> flows;  // sorted by (app, component, from, to)
  friend bool operator==(const FlowDocument&, const FlowDocument&) = default;
};

inline json flows_to_json(const FlowDocument& doc) {
  json flows = json::array();
  for (const auto& f : doc.flows) {
    flows.push_back({{"component", component_key(f.app, f.component)},
                     {"from", f.from},
                     {"to", f.to},
                     {"witness", f.witness}});
  }
  return {{"flows", flows}};
}

inline std::string dump_flows(const FlowDocument& doc) { return flows_to_json(doc).dump(2) + "\n"; }

inline FlowDocument flows_from_json(const json& j) {
  using namespace detail;
  expect_keys(j, {"flows"}, "flow document");
  FlowDocument doc;
  const auto& flows = get_array(j, "flows", "flow document");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string at = "flows[" + std::to_string(i) + "]";
    expect_keys(flows[i], {"component", "from", "to", "witness"}, at);
    IntraFlow f;
    const auto key = get_string(flows[i], "component", at);
    const auto slash = key.find('/');
    if (slash == std::string::npos) {
      throw Error(ErrorCode::Schema, at + ".component: expected \"app/component\"");
    }
    f.app = key.substr(0, slash);
    f.component = key.substr(slash + 1);
    f.from = get_string(flows[i], "from", at);
    f.to = get_string(flows[i], "to", at);
    f.witness = get_string_array(flows[i], "witness", at);
    doc.flows.push_back(std::move(f));
  }
  return doc;
}

inline FlowDocument parse_flows(std::string_view text) {
  return flows_from_json(detail::parse_document(text));
}

}  // namespace trustflow
