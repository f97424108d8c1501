#pragma once

// End-to-end analysis: components -> points -> slices -> component graphs ->
// application flows -> ecosystem -> critical flows -> scores -> report.
// Each phase takes only documents produced by earlier phases.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "trustflow/app_model.hpp"
#include "trustflow/arch_scan.hpp"
#include "trustflow/catalog.hpp"
#include "trustflow/flowgraph.hpp"
#include "trustflow/report.hpp"
#include "trustflow/risk.hpp"
#include "trustflow/slicer.hpp"

namespace trustflow {

inline unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Runs `fn(i)` for every i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned jobs,
                         const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Throws a Schema error listing every violation when the ecosystem is not
/// analyzable.
inline void require_valid(std::span<const AppBundle> bundles) {
  const auto report = validate_ecosystem(bundles);
  if (report.ok()) return;
  std::string msg = "ecosystem is not analyzable:";
  for (const auto& v : report.violations) {
    msg += "\n  " + std::string(to_string(v.rule)) + " at " + v.location;
    if (!v.detail.empty()) msg += ": " + v.detail;
  }
  throw Error(ErrorCode::Schema, msg);
}

inline ExchangeDocument run_scan(std::span<const AppBundle> bundles, const ApiCatalog& catalog) {
  require_valid(bundles);
  const auto index = identify_components(bundles);
  std::vector<ComponentPoints> points;
  points.reserve(index.size());
  for (const auto& ref : index.components()) {
    points.push_back(find_ipc_points(*ref.app, *ref.component, catalog));
  }
  return emit_exchange(index, points);
}

inline FlowDocument run_slice(std::span<const AppBundle> bundles, const ExchangeDocument& exchange,
                              unsigned jobs) {
  const auto index = identify_components(bundles);
  std::vector<std::vector<IntraFlow>> per_component(exchange.components.size());
  parallel_for(exchange.components.size(), jobs, [&](std::size_t i) {
    const auto& ec = exchange.components[i];
    const ComponentRef* ref = index.find(ec.app, ec.name);
    if (ref == nullptr) {
      throw Error(ErrorCode::Schema, "exchange names unknown component " + component_key(ec.app, ec.name));
    }
    const auto entries = ec.entries();
    const auto exits = ec.exits();
    per_component[i] = intra_component_flows(*ref->component, entries, exits);
  });
  FlowDocument doc;
  for (auto& flows : per_component) {
    doc.flows.insert(doc.flows.end(), std::make_move_iterator(flows.begin()),
                     std::make_move_iterator(flows.end()));
  }
  std::sort(doc.flows.begin(), doc.flows.end(), [](const IntraFlow& a, const IntraFlow& b) {
    return std::tie(a.app, a.component, a.from, a.to) < std::tie(b.app, b.component, b.from, b.to);
  });
  return doc;
}

struct GraphResult {
  FlowGraph graph;
  std::vector<std::string> resolution_errors;
};

inline GraphResult run_graph(std::span<const AppBundle> bundles, const ExchangeDocument& exchange,
                             const FlowDocument& flows, const ApiCatalog& catalog) {
  const auto index = identify_components(bundles);
  std::vector<FlowGraph> graphs;
  graphs.reserve(bundles.size());
  for (const auto& app : bundles) {
    graphs.push_back(build_component_flow_graph(app, exchange, flows.flows, catalog));
  }
  GraphResult out;
  const auto ipc = resolve_all_ipc(index, exchange, catalog, &out.resolution_errors);
  out.graph = compose_ecosystem(graphs, ipc);
  return out;
}

/// Counts derived from the bundles and the composed graph only, so that the
/// report phase gives the same numbers whether run alone or end to end.
inline ReportStats graph_stats(std::span<const AppBundle> bundles, const FlowGraph& graph,
                               std::size_t critical) {
  ReportStats s;
  std::size_t components = 0;
  for (const auto& app : bundles) components += app.components.size();
  std::size_t points = 0, sources = 0, sinks = 0, intra = 0, ipc = 0, blocked = 0;
  for (const auto& [_, n] : graph.nodes()) {
    points += n.kind == NodeKind::Point;
    sources += n.kind == NodeKind::Source;
    sinks += n.kind == NodeKind::Sink;
  }
  for (const auto& e : graph.edges()) {
    intra += e.kind == EdgeKind::IntraFlow;
    if (e.kind == EdgeKind::Ipc) {
      ++ipc;
      blocked += e.permission_blocked || e.export_blocked;
    }
  }
  std::size_t app_flows = 0;
  const detail::IndexedGraph indexed(graph);
  for (const auto& app : bundles) app_flows += detail::application_flows(indexed, app.app_id).size();
  s.counts = {{"apps", bundles.size()},
              {"components", components},
              {"points", points},
              {"source_terminals", sources},
              {"sink_terminals", sinks},
              {"intra_flows", intra},
              {"ipc_edges", ipc},
              {"blocked_ipc_edges", blocked},
              {"application_flows", app_flows},
              {"critical_flows", critical}};
  return s;
}

inline AnalysisReport run_report(std::span<const AppBundle> bundles, const FlowGraph& graph,
                                 const ApiCatalog& catalog) {
  const auto index = identify_components(bundles);
  const auto flows = critical_flows(graph);
  std::vector<RiskScore> scores;
  std::vector<std::vector<PermissionFinding>> findings;
  for (const auto& f : flows) {
    scores.push_back(score_flow(f));
    findings.push_back(permission_boundaries(f, graph, index));
  }
  ReportDigest digest{index.app_ids(), catalog.digest()};
  return to_report(flows, scores, findings, std::move(digest),
                   graph_stats(bundles, graph, flows.size()));
}

struct AnalyzeOptions {
  unsigned jobs = default_jobs();
  bool timings = false;
};

struct AnalysisResult {
  ExchangeDocument exchange;
  FlowDocument flows;
  FlowGraph graph;
  std::vector<std::string> resolution_errors;
  AnalysisReport report;
};

inline AnalysisResult analyze(std::span<const AppBundle> bundles, const ApiCatalog& catalog,
                              const AnalyzeOptions& options = {}) {
  using clock = std::chrono::steady_clock;
  std::map<std::string, double> timings;
  auto timed = [&](const char* phase, auto&& fn) {
    const auto start = clock::now();
    fn();
    timings[phase] = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };
  AnalysisResult r;
  timed("scan", [&] { r.exchange = run_scan(bundles, catalog); });
  timed("slice", [&] { r.flows = run_slice(bundles, r.exchange, options.jobs); });
  timed("graph", [&] {
    auto g = run_graph(bundles, r.exchange, r.flows, catalog);
    r.graph = std::move(g.graph);
    r.resolution_errors = std::move(g.resolution_errors);
  });
  timed("report", [&] { r.report = run_report(bundles, r.graph, catalog); });
  if (options.timings) r.report.stats.timings_ms = std::move(timings);
  return r;
}

}  // namespace trustflow
