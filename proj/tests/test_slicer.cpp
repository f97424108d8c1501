#include <gtest/gtest.h>

#include <set>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "trustflow.hpp"

namespace {
using namespace trustflow;
using namespace trustflow::testing;

const Component& result_web_view() {
  static const auto bundles = make_scenario(ScenarioKind::CaseStudy);
  return *bundles[0].find_component("ResultWebView");
}

std::set<std::string> labels_of(const DependenceGraph& g, const std::vector<NodeId>& nodes) {
  std::set<std::string> out;
  for (auto n : nodes) out.insert(g.label(n));
  return out;
}

std::set<std::pair<std::string, std::string>> pairs_of(const std::vector<IntraFlow>& flows) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& f : flows) out.insert({f.from, f.to});
  return out;
}

TEST(BuildDependence, ConstThenAssign) {
  Component c;
  c.name = "C";
  c.methods = {Method{"m", {}, {{ConstStmt{"a"}}, {AssignStmt{"b", {"a"}}}}}};
  const auto g = build_dependence(c);
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 1u);
  ASSERT_EQ(g.dependencies(g.statement_node(0, 1)).size(), 1u);
  EXPECT_EQ(g.dependencies(g.statement_node(0, 1))[0].to, g.statement_node(0, 0));
  EXPECT_EQ(g.dependencies(g.statement_node(0, 1))[0].kind, DepEdgeKind::Data);
}

TEST(BuildDependence, EmptyMethod) {
  Component c;
  c.methods = {Method{"m", {"p"}, {}}};
  const auto g = build_dependence(c);
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(BuildDependence, CallBindingInResultWebView) {
  const auto g = build_dependence(result_web_view());
  const auto on_create = *g.method_index("onCreate");
  const auto load = *g.method_index("loadResults");
  const auto param = g.param_node(load, 0);
  ASSERT_EQ(g.dependencies(param).size(), 1u);
  EXPECT_EQ(g.dependencies(param)[0].to, g.statement_node(on_create, 0));
  EXPECT_EQ(g.dependencies(param)[0].kind, DepEdgeKind::ArgToParam);
  EXPECT_EQ(g.label(param), "loadResults(extras)");
  EXPECT_EQ(g.label(g.statement_node(on_create, 1)), "onCreate#1");
}

TEST(BuildDependence, MostRecentDefinitionWins) {
  Component c;
  c.methods = {Method{"m", {"x"}, {{AssignStmt{"y", {"x"}}}, {ConstStmt{"x"}}, {AssignStmt{"z", {"x"}}}}}};
  const auto g = build_dependence(c);
  ASSERT_EQ(g.dependencies(g.statement_node(0, 2)).size(), 1u);
  EXPECT_EQ(g.dependencies(g.statement_node(0, 2))[0].to, g.statement_node(0, 1));
  EXPECT_EQ(g.dependencies(g.statement_node(0, 0))[0].to, g.param_node(0, 0));
}

TEST(BuildDependence, ReturnValueBindsToCallDefinition) {
  Component c;
  c.methods = {Method{"m", {}, {{CallStmt{"r", "f", {}}}}},
               Method{"f", {}, {{ConstStmt{"ret"}}, {AssignStmt{"ret", {"ret"}}}, {ConstStmt{"other"}}}}};
  const auto g = build_dependence(c);
  const auto deps = g.dependencies(g.statement_node(0, 0));
  ASSERT_EQ(deps.size(), 1u);
  EXPECT_EQ(deps[0].to, g.statement_node(1, 1));
  EXPECT_EQ(deps[0].kind, DepEdgeKind::ReturnToCall);
}

TEST(BackwardSlice, ResultWebViewReachesEntryData) {
  const auto& comp = result_web_view();
  const auto points = scan_component(comp, "PubTrans");
  const auto g = build_dependence(comp);
  const auto slice = labels_of(g, backward_slice(g, points.exits[0]));
  EXPECT_EQ(slice, (std::set<std::string>{"loadResults#0", "loadResults(extras)", "onCreate#0"}));
}

TEST(BackwardSlice, ConstantOnlyExitCarriesNoEntryData) {
  Component c;
  c.name = "C";
  c.kind = ComponentKind::Activity;
  c.methods = {Method{"onCreate", {"state"},
                      {{ConstStmt{"url"}}, {ApiStmt{std::nullopt, "WebView.loadUrl", {"url"}, std::nullopt}}}}};
  const auto points = scan_component(c);
  const auto g = build_dependence(c);
  const auto slice = backward_slice(g, points.exits[0]);
  EXPECT_EQ(labels_of(g, slice), (std::set<std::string>{"onCreate#0"}));
  EXPECT_TRUE(intra_component_flows(c, points.entries, points.exits).empty());
}

TEST(BackwardSlice, UnknownExit) {
  const auto g = build_dependence(result_web_view());
  IpcPoint bogus;
  bogus.id = "x";
  bogus.role = PointRole::Exit;
  bogus.method = "nope";
  bogus.statement_index = 0;
  EXPECT_THROW(backward_slice(g, bogus), Error);
  bogus.method = "loadResults";
  bogus.statement_index = 9;
  EXPECT_THROW(backward_slice(g, bogus), Error);
  bogus.statement_index = 0;
  bogus.role = PointRole::Entry;
  try {
    backward_slice(g, bogus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownExit);
  }
}

TEST(IntraComponentFlows, ResultWebView) {
  const auto& comp = result_web_view();
  const auto points = scan_component(comp, "PubTrans");
  const auto flows = intra_component_flows(comp, points.entries, points.exits);
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flows[0].from, "PubTrans/ResultWebView/onCreate#entry");
  EXPECT_EQ(flows[0].to, "PubTrans/ResultWebView/loadResults#1:exit");
  EXPECT_EQ(flows[0].witness,
            (std::vector<std::string>{"onCreate#0", "loadResults(extras)", "loadResults#0", "loadResults#1"}));
}

TEST(IntraComponentFlows, MainActivityMatchesOracle) {
  const auto bundles = make_scenario(ScenarioKind::CaseStudy);
  const auto& comp = *bundles[0].find_component("MainActivity");
  const auto points = scan_component(comp, "PubTrans");
  const auto flows = intra_component_flows(comp, points.entries, points.exits);
  const SliceOracle oracle(comp);
  EXPECT_EQ(pairs_of(flows), oracle.flows(points.entries, points.exits));
  EXPECT_EQ(pairs_of(flows), (std::set<std::pair<std::string, std::string>>{
                                 {"PubTrans/MainActivity/onLocationResult#0:entry",
                                  "PubTrans/MainActivity/onLocationResult#3:exit"}}));
}

TEST(IntraComponentFlows, NoChainNoFlow) {
  Component c;
  c.kind = ComponentKind::Activity;
  c.methods = {Method{"onCreate", {"state"},
                      {{ApiStmt{"d", "getIntent", {}, std::nullopt}},
                       {ConstStmt{"u"}},
                       {ApiStmt{std::nullopt, "SMS.send", {"u"}, std::nullopt}}}}};
  const auto points = scan_component(c);
  EXPECT_TRUE(intra_component_flows(c, points.entries, points.exits).empty());
}

TEST(FlowDocument, RoundTrip) {
  const auto bundles = make_scenario(ScenarioKind::CaseStudy);
  const auto result = analyze_bundles(bundles);
  const auto text = dump_flows(result.flows);
  EXPECT_EQ(parse_flows(text), result.flows);
  EXPECT_NE(text.find("\"component\": \"PubTrans/ResultWebView\""), std::string::npos);
  EXPECT_THROW(parse_flows(R"({"flows": [{"component": "nocomponent", "from": "a", "to": "b", "witness": []}]})"),
               Error);
}

TEST(SliceProperty, OracleEquivalence) {
  Rng rng(2024);
  for (int i = 0; i < 400; ++i) {
    ComponentShape shape;
    shape.strict = (i % 3) != 0;
    const auto comp = random_component(rng, "C", random_kind(rng), shape);
    const auto points = scan_component(comp);
    const SliceOracle oracle(comp);
    const auto g = build_dependence(comp);
    for (const auto& exit : points.exits) {
      std::set<std::string> expected;
      for (auto n : oracle.slice_of_exit(exit)) expected.insert(oracle.label(n));
      ASSERT_EQ(labels_of(g, backward_slice(g, exit)), expected) << "seed index " << i;
    }
    const auto flows = intra_component_flows(g, points.entries, points.exits);
    ASSERT_EQ(pairs_of(flows), oracle.flows(points.entries, points.exits)) << "seed index " << i;
  }
}

// Witnesses are real dependence chains of minimal length, from an entry
// anchor to the exit statement.
TEST(SliceProperty, WitnessIsShortestDependenceChain) {
  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto comp = random_component(rng, "C", random_kind(rng));
    const auto points = scan_component(comp);
    const SliceOracle oracle(comp);
    for (const auto& f : intra_component_flows(comp, points.entries, points.exits)) {
      ASSERT_GE(f.witness.size(), 2u);
      std::vector<std::size_t> nodes;
      for (const auto& l : f.witness) nodes.push_back(*oracle.node_of(l));
      for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        ASSERT_TRUE(oracle.depends_directly(nodes[k + 1], nodes[k])) << f.witness[k + 1] << " -> " << f.witness[k];
      }
      const IpcPoint* entry = nullptr;
      const IpcPoint* exit = nullptr;
      for (const auto& p : points.entries) if (p.id == f.from) entry = &p;
      for (const auto& p : points.exits) if (p.id == f.to) exit = &p;
      ASSERT_TRUE(entry && exit);
      EXPECT_EQ(nodes.back(), oracle.exit_node(*exit));
      const auto anchors = oracle.anchors(*entry);
      EXPECT_NE(std::find(anchors.begin(), anchors.end(), nodes.front()), anchors.end());
      std::size_t best = SIZE_MAX;
      for (auto a : anchors) {
        if (a == oracle.exit_node(*exit)) continue;
        if (auto d = oracle.distance(oracle.exit_node(*exit), a)) best = std::min(best, *d);
      }
      EXPECT_EQ(nodes.size() - 1, best);
    }
  }
}

// Appending a statement (that does not redefine the return value) never
// shrinks the slice of an existing exit.
TEST(SliceProperty, MonotoneUnderAppendedStatements) {
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    ComponentShape shape;
    shape.strict = false;
    auto comp = random_component(rng, "C", random_kind(rng), shape);
    const auto points = scan_component(comp);
    const auto before_graph = build_dependence(comp);
    std::vector<std::set<std::string>> before;
    for (const auto& exit : points.exits) before.push_back(labels_of(before_graph, backward_slice(before_graph, exit)));

    auto& method = comp.methods[pick(rng, comp.methods.size())];
    const std::vector<std::string> vars{"a", "b", "c", "p0", "intent"};
    switch (between(rng, 0, 2)) {
      case 0: method.body.push_back({AssignStmt{one_of(rng, vars), {one_of(rng, vars)}}}); break;
      case 1: method.body.push_back({CallStmt{one_of(rng, vars), comp.methods[pick(rng, comp.methods.size())].name,
                                              {one_of(rng, vars), one_of(rng, vars)}}}); break;
      default: method.body.push_back({ApiStmt{std::nullopt, "WebView.loadUrl", {one_of(rng, vars)}, std::nullopt}}); break;
    }
    const auto after_graph = build_dependence(comp);
    for (std::size_t k = 0; k < points.exits.size(); ++k) {
      const auto after = labels_of(after_graph, backward_slice(after_graph, points.exits[k]));
      for (const auto& l : before[k]) ASSERT_TRUE(after.count(l)) << l << " dropped at seed index " << i;
    }
  }
}

TEST(SliceProperty, TerminatesOnRecursionAndVisitsEachEdgeOnce) {
  Component c;
  c.kind = ComponentKind::Service;
  c.methods = {Method{"onBind", {"intent"},
                      {{CallStmt{"ret", "ping", {"intent"}}},
                       {ApiStmt{std::nullopt, "SMS.send", {"ret"}, std::nullopt}}}},
               Method{"ping", {"x"}, {{CallStmt{"ret", "pong", {"x"}}}}},
               Method{"pong", {"y"}, {{CallStmt{"ret", "ping", {"y"}}}, {CallStmt{"z", "onBind", {"ret"}}}}}};
  const auto points = scan_component(c);
  const auto g = build_dependence(c);
  SliceStats stats;
  const auto slice = backward_slice(g, points.exits[0], &stats);
  EXPECT_LE(stats.nodes_expanded, g.node_count());
  EXPECT_LE(stats.edges_visited, g.edge_count());
  EXPECT_EQ(labels_of(g, slice), (std::set<std::string>{"onBind#0", "onBind(intent)", "ping#0", "ping(x)",
                                                        "pong#0", "pong(y)"}));
  EXPECT_EQ(intra_component_flows(g, points.entries, points.exits).size(), 1u);

  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const auto comp = random_component(rng, "C", random_kind(rng));
    const auto pts = scan_component(comp);
    const auto dg = build_dependence(comp);
    for (const auto& exit : pts.exits) {
      SliceStats s;
      backward_slice(dg, exit, &s);
      ASSERT_LE(s.nodes_expanded, dg.node_count());
      ASSERT_LE(s.edges_visited, dg.edge_count());
    }
  }
}

TEST(SliceProperty, EdgesStayInsideComponentAndWitnessStartsAtEntryData) {
  const auto bundles = make_scenario(ScenarioKind::CaseStudy);
  for (const auto& app : bundles) {
    for (const auto& comp : app.components) {
      const auto g = build_dependence(comp);
      for (NodeId n = 0; n < g.node_count(); ++n) {
        for (const auto& e : g.dependencies(n)) EXPECT_LT(e.to, g.node_count());
      }
    }
  }
}

}  // namespace
