#pragma once

// Command-line front end. Every subcommand reads and writes the JSON documents
// of the pipeline, so `scan | slice | graph | report` reproduces `analyze`.
//
// Exit codes: 0 no critical flow (or success for intermediate phases),
// 3 critical flows found, 1 input error, 2 internal error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trustflow/pipeline.hpp"
#include "trustflow/scenarios.hpp"

namespace trustflow {

enum ExitCode : int { kExitClean = 0, kExitInputError = 1, kExitInternalError = 2, kExitFlowsFound = 3 };

inline const std::set<std::string>& emit_choices() {
  static const std::set<std::string> choices{"exchange", "flows", "graph", "dot", "report", "summary"};
  return choices;
}

struct RunConfig {
  std::vector<std::string> bundles;
  std::string catalog;  // empty: built-in tables
  std::string out;      // output directory; empty: summary to stdout only
  std::set<std::string> emit{"report", "dot", "summary"};
  GraphLevel level = GraphLevel::Point;
  unsigned jobs = default_jobs();
  bool timings = false;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

inline void emit_to(const std::string& path, std::string_view text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

/// Errors mention the file they came from.
template <class Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path + ": " + e.message(), e.line(), e.column());
  }
}

inline std::vector<AppBundle> load_bundles(const std::vector<std::string>& paths) {
  std::vector<AppBundle> out;
  for (const auto& p : paths) {
    out.push_back(with_path(p, [](const std::string& text) { return parse_bundle(text); }));
  }
  return out;
}

inline ApiCatalog load_catalog_file(const std::string& path) {
  if (path.empty()) return default_catalog();
  return with_path(path, [](const std::string& text) { return load_catalog(text); });
}

inline void warn_resolution(const std::vector<std::string>& errors, std::ostream& err) {
  for (const auto& e : errors) err << "warning: " << e << "\n";
}

inline int write_report_artifacts(const RunConfig& cfg, const AnalysisReport& report,
                                  const FlowGraph& graph, std::ostream& out) {
  const std::filesystem::path dir = cfg.out;
  if (!cfg.out.empty()) {
    if (cfg.emit.count("graph")) write_file(dir / "graph.json", dump_graph(graph));
    if (cfg.emit.count("dot")) write_file(dir / "graph.dot", to_dot(graph, cfg.level));
    if (cfg.emit.count("report")) write_file(dir / "report.json", dump_report(report));
    if (cfg.emit.count("summary")) write_file(dir / "summary.txt", user_summary(report));
  }
  if (cfg.emit.count("summary")) out << user_summary(report);
  return report.critical_flows.empty() ? kExitClean : kExitFlowsFound;
}

}  // namespace detail

inline int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.bundles.empty()) throw Error(ErrorCode::Schema, "at least one bundle is required");
  const auto bundles = detail::load_bundles(cfg.bundles);
  const auto catalog = detail::load_catalog_file(cfg.catalog);
  const auto result = analyze(bundles, catalog, {cfg.jobs, cfg.timings});
  detail::warn_resolution(result.resolution_errors, err);
  if (!cfg.out.empty()) {
    const std::filesystem::path dir = cfg.out;
    if (cfg.emit.count("exchange")) detail::write_file(dir / "exchange.json", dump_exchange(result.exchange));
    if (cfg.emit.count("flows")) detail::write_file(dir / "flows.json", dump_flows(result.flows));
  }
  return detail::write_report_artifacts(cfg, result.report, result.graph, out);
}

inline int cmd_gen_scenario(ScenarioKind kind, const std::string& dir, std::ostream& out) {
  for (const auto& p : write_scenario(kind, dir.empty() ? "." : dir)) out << p.string() << "\n";
  return kExitClean;
}

/// Parses `args` (without the program name) and runs the selected subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static analysis of transitive information flows across apps"};
  app.name("trustflow");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string level = "point";
  std::vector<std::string> emit;
  std::string exchange_path, flows_path, graph_path, kind;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("bundles", cfg.bundles, "App bundle documents")->check(CLI::ExistingFile);
    cmd->add_option("--catalog", cfg.catalog, "API catalog document (default: built-in tables)")
        ->check(CLI::ExistingFile);
  };
  auto add_report_flags = [&](CLI::App* cmd) {
    cmd->add_option("--out", cfg.out, "Output directory");
    cmd->add_option("--emit", emit, "Artifacts to write: exchange, flows, graph, dot, report, summary")
        ->delimiter(',')
        ->check(CLI::IsMember(emit_choices()));
    cmd->add_option("--level", level, "DOT abstraction level")
        ->check(CLI::IsMember({"point", "component", "application"}));
    cmd->add_flag("--timings", cfg.timings, "Record phase timings in the report");
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Run the whole pipeline");
  add_common(analyze_cmd);
  add_report_flags(analyze_cmd);
  analyze_cmd->add_option("--jobs", cfg.jobs, "Parallel slicing workers")->check(CLI::PositiveNumber);

  auto* scan_cmd = app.add_subcommand("scan", "Find components and IPC points");
  add_common(scan_cmd);
  scan_cmd->add_option("--out", cfg.out, "Exchange document path (default: stdout)");

  auto* slice_cmd = app.add_subcommand("slice", "Compute intra-component flows");
  add_common(slice_cmd);
  slice_cmd->add_option("--exchange", exchange_path, "Exchange document")
      ->required()
      ->check(CLI::ExistingFile);
  slice_cmd->add_option("--jobs", cfg.jobs, "Parallel slicing workers")->check(CLI::PositiveNumber);
  slice_cmd->add_option("--out", cfg.out, "Flow document path (default: stdout)");

  auto* graph_cmd = app.add_subcommand("graph", "Compose the ecosystem flow graph");
  add_common(graph_cmd);
  graph_cmd->add_option("--exchange", exchange_path, "Exchange document")
      ->required()
      ->check(CLI::ExistingFile);
  graph_cmd->add_option("--flows", flows_path, "Flow document")->required()->check(CLI::ExistingFile);
  graph_cmd->add_option("--out", cfg.out, "Graph document path (default: stdout)");

  auto* report_cmd = app.add_subcommand("report", "Score critical flows and render outputs");
  add_common(report_cmd);
  add_report_flags(report_cmd);
  report_cmd->add_option("--graph", graph_path, "Graph document")->required()->check(CLI::ExistingFile);

  auto* gen_cmd = app.add_subcommand("gen-scenario", "Write scenario bundles");
  gen_cmd->add_option("kind", kind, "a, b, c or case_study")
      ->required()
      ->check(CLI::IsMember({"a", "b", "c", "case_study"}));
  gen_cmd->add_option("--out", cfg.out, "Output directory (default: current directory)");

  std::vector<const char*> argv{"trustflow"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitClean : kExitInputError;
  }

  if (!emit.empty()) cfg.emit = {emit.begin(), emit.end()};
  cfg.level = *parse_graph_level(level);

  try {
    if (*analyze_cmd) return cmd_analyze(cfg, out, err);
    if (*gen_cmd) return cmd_gen_scenario(*parse_scenario_kind(kind), cfg.out, out);

    if (cfg.bundles.empty()) throw Error(ErrorCode::Schema, "at least one bundle is required");
    const auto bundles = detail::load_bundles(cfg.bundles);
    const auto catalog = detail::load_catalog_file(cfg.catalog);
    if (*scan_cmd) {
      detail::emit_to(cfg.out, dump_exchange(run_scan(bundles, catalog)), out);
      return kExitClean;
    }
    if (*slice_cmd) {
      const auto exchange = detail::with_path(exchange_path, [](const std::string& t) { return parse_exchange(t); });
      detail::emit_to(cfg.out, dump_flows(run_slice(bundles, exchange, cfg.jobs)), out);
      return kExitClean;
    }
    if (*graph_cmd) {
      const auto exchange = detail::with_path(exchange_path, [](const std::string& t) { return parse_exchange(t); });
      const auto flows = detail::with_path(flows_path, [](const std::string& t) { return parse_flows(t); });
      require_valid(bundles);
      auto result = run_graph(bundles, exchange, flows, catalog);
      detail::warn_resolution(result.resolution_errors, err);
      detail::emit_to(cfg.out, dump_graph(result.graph), out);
      return kExitClean;
    }
    const auto graph = detail::with_path(graph_path, [](const std::string& t) { return parse_graph(t); });
    require_valid(bundles);
    return detail::write_report_artifacts(cfg, run_report(bundles, graph, catalog), graph, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}

}  // namespace trustflow
