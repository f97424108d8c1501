// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "trustflow.hpp"
#include "trustflow/commands.hpp"

namespace {
using namespace trustflow;
using namespace trustflow::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return run_cli(args, out, err);
}

std::string component_of(const std::string& point_id) {
  const auto first = point_id.find('/');
  const auto second = point_id.find('/', first + 1);
  if (first == std::string::npos || second == std::string::npos) return "";
  return point_id.substr(first + 1, second - first - 1);
}

struct ScenarioRun {
  int code = -1;
  double seconds = 0;
  AnalysisReport report;
};

ScenarioRun run_scenario(const std::string& kind, const TempDir& dir) {
  ScenarioRun r;
  const auto bundle_dir = dir.str(kind);
  if (cli({"gen-scenario", kind, "--out", bundle_dir}) != kExitClean) return r;
  std::vector<std::string> args{"analyze", "--emit", "report,dot,summary", "--out", dir.str(kind + "-out")};
  for (const auto& entry : std::filesystem::directory_iterator(bundle_dir)) args.push_back(entry.path().string());
  const auto start = Clock::now();
  r.code = cli(args);
  r.seconds = seconds_since(start);
  r.report = parse_report(slurp(dir.path() / (kind + "-out") / "report.json"));
  return r;
}

Outcome case_study() {
  TempDir dir;
  const auto r = run_scenario("case_study", dir);
  std::ostringstream why;
  bool ok = r.code == kExitFlowsFound && r.report.critical_flows.size() == 1 && r.seconds < 1.0;
  if (ok) {
    const auto& f = r.report.critical_flows[0];
    std::vector<std::string> components;
    for (const auto& id : f.witness) {
      const auto c = component_of(id);
      if (!c.empty() && (components.empty() || components.back() != c)) components.push_back(c);
    }
    ok = f.source == "LocationManager.getLastKnownLocation" && f.sink == "WebView.loadUrl" &&
         f.sink_channel == "Network (WebView)" &&
         f.apps == std::vector<std::string>{"PubTransLocation", "PubTrans"} &&
         components == std::vector<std::string>{"LocationService", "MainActivity", "ResultWebView"};
    why << f.source << " -> " << f.sink << " via";
    for (const auto& c : components) why << " " << c;
    why << ", ";
  }
  why << r.report.critical_flows.size() << " flow(s), exit " << r.code << ", " << fixed(r.seconds) << " s";
  return {ok, why.str()};
}

Outcome scenarios() {
  TempDir dir;
  const std::pair<const char*, std::size_t> expected[] = {{"a", 1}, {"b", 2}, {"c", 2}};
  bool ok = true;
  std::ostringstream why;
  for (const auto& [kind, apps] : expected) {
    const auto r = run_scenario(kind, dir);
    const bool one = r.report.critical_flows.size() == 1;
    const std::size_t length = one ? r.report.critical_flows[0].apps.size() : 0;
    std::size_t unguarded = 0;
    if (one) {
      for (const auto& p : r.report.critical_flows[0].permissions) {
        unguarded += p.verdict == PermissionVerdict::Unguarded;
      }
    }
    ok = ok && one && length == apps && r.seconds < 1.0 && r.code == kExitFlowsFound;
    if (std::string(kind) == "c") ok = ok && unguarded >= 1;
    why << kind << ": " << r.report.critical_flows.size() << " flow, " << length << " app(s)";
    if (std::string(kind) == "c") why << ", " << unguarded << " unguarded";
    why << ", " << fixed(r.seconds) << " s; ";
  }
  return {ok, why.str()};
}

Outcome slicer_oracle() {
  const auto start = Clock::now();
  Rng rng(1000);
  std::size_t disagreements = 0, flows = 0;
  const int count = 1200;
  for (int i = 0; i < count; ++i) {
    ComponentShape shape;
    shape.max_statements = 30;
    shape.max_methods = 4;
    shape.strict = (i % 3) != 0;
    const auto comp = random_component(rng, "C", random_kind(rng), shape);
    const auto points = scan_component(comp);
    const SliceOracle oracle(comp);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& f : intra_component_flows(comp, points.entries, points.exits)) got.insert({f.from, f.to});
    flows += got.size();
    disagreements += got != oracle.flows(points.entries, points.exits);
  }
  const double secs = seconds_since(start);
  return {disagreements == 0 && secs < 60.0,
          std::to_string(count) + " components, " + std::to_string(flows) + " flows, " +
              std::to_string(disagreements) + " disagreements, " + fixed(secs) + " s"};
}

std::set<std::string> flow_keys(const std::vector<AppBundle>& bundles) {
  std::set<std::string> out;
  for (const auto& f : critical_flows(analyze_bundles(bundles).graph)) out.insert(f.key());
  return out;
}

Outcome monotonicity() {
  Rng rng(4000);
  const int count = 250;
  std::size_t violations = 0, flows = 0;
  for (int i = 0; i < count; ++i) {
    const EcosystemShape shape;
    auto bundles = random_ecosystem(rng, shape);
    const auto before = flow_keys(bundles);
    const int n = static_cast<int>(bundles.size());
    bundles.push_back(random_app(rng, "App" + std::to_string(n), shape, n + 1));
    const auto after = flow_keys(bundles);
    flows += before.size();
    for (const auto& k : before) violations += after.count(k) == 0;
  }
  return {violations == 0, std::to_string(count) + " ecosystems, " + std::to_string(flows) +
                               " prior flows, " + std::to_string(violations) + " removed"};
}

Outcome determinism() {
  TempDir dir;
  Rng rng(5000);
  EcosystemShape shape;
  shape.min_apps = 12;
  shape.max_apps = 12;
  shape.max_components = 4;
  auto corpus = concat(random_ecosystem(rng, shape), make_scenario(ScenarioKind::CaseStudy));
  std::vector<std::string> paths;
  for (const auto& b : corpus) {
    const auto p = dir.path() / "bundles" / (b.app_id + ".json");
    std::filesystem::create_directories(p.parent_path());
    spit(p, serialize_bundle(b));
    paths.push_back(p.string());
  }
  const std::vector<std::pair<std::string, std::string>> runs{{"1", "first"}, {"1", "second"}, {"8", "eight"}};
  std::vector<int> codes;
  for (const auto& [jobs, name] : runs) {
    std::vector<std::string> args{"analyze", "--jobs", jobs, "--out", dir.str(name)};
    args.insert(args.end(), paths.begin(), paths.end());
    codes.push_back(cli(args));
  }
  bool ok = codes[0] != kExitInputError && codes[0] != kExitInternalError;
  for (const char* file : {"report.json", "graph.dot"}) {
    const auto reference = slurp(dir.path() / "first" / file);
    ok = ok && !reference.empty();
    for (const auto& [_, name] : runs) ok = ok && slurp(dir.path() / name / file) == reference;
  }
  ok = ok && codes[0] == codes[1] && codes[1] == codes[2];
  const auto flows = parse_report(slurp(dir.path() / "first" / "report.json")).critical_flows.size();
  return {ok, std::to_string(corpus.size()) + " apps, " + std::to_string(flows) +
                  " flows; report.json and graph.dot identical across 2 runs with --jobs 1 and 1 with --jobs 8"};
}

AppBundle sized_app(Rng& rng, const std::string& id, int components, int statements, int app_bound) {
  AppBundle app;
  app.app_id = id;
  if (chance(rng, 0.5)) app.granted_permissions.insert("perm.X");
  ComponentShape shape;
  shape.max_statements = statements;
  shape.min_statements = statements;
  shape.max_methods = 4;
  shape.targets = ipc_targets(app_bound, components);
  for (int c = 0; c < components; ++c) {
    auto comp = random_component(rng, "C" + std::to_string(c), random_kind(rng), shape);
    comp.intent_filters.clear();
    if (comp.exported && chance(rng, 0.7)) comp.intent_filters.push_back(one_of(rng, action_pool()));
    app.components.push_back(std::move(comp));
  }
  return app;
}

// Least-squares slope of log(time) against log(size).
double loglog_slope(const std::vector<std::pair<double, double>>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(points.size());
  for (const auto& [x, y] : points) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome scalability() {
  Rng rng(6000);
  const int apps = 100, components = 5, statements = 40;
  std::vector<AppBundle> bundles;
  for (int a = 0; a < apps; ++a) {
    bundles.push_back(sized_app(rng, "App" + std::to_string(a), components, statements, apps));
  }
  const auto start = Clock::now();
  const auto result = analyze(bundles, default_catalog(), {default_jobs(), false});
  const double whole = seconds_since(start);

  const std::vector<int> sizes{10, 20, 40, 80, 160, 300};
  const int per_size = 40, repeats = 15;
  std::vector<std::vector<Component>> comps(sizes.size());
  std::vector<std::vector<ComponentPoints>> scanned(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    ComponentShape shape;
    shape.max_statements = sizes[k];
    shape.min_statements = sizes[k];
    shape.max_methods = 4;
    for (int i = 0; i < per_size; ++i) {
      comps[k].push_back(random_component(rng, "C", random_kind(rng), shape));
      scanned[k].push_back(scan_component(comps[k].back()));
    }
  }
  // Sizes are interleaved within each repeat so that a slow stretch of the
  // machine does not land on one size only; each timed batch runs warm.
  std::vector<double> best(sizes.size(), 1e300);
  std::size_t sink = 0;
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const auto batch = [&] {
        for (int i = 0; i < per_size; ++i) {
          sink += intra_component_flows(comps[k][i], scanned[k][i].entries, scanned[k][i].exits).size();
        }
      };
      batch();  // warm caches after the previous size
      const auto t0 = Clock::now();
      batch();
      best[k] = std::min(best[k], seconds_since(t0));
    }
  }
  if (sink == std::size_t(-1)) std::cout << "";
  std::vector<std::pair<double, double>> points;
  std::ostringstream series;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double per_component_us = best[k] / per_size * 1e6;
    points.push_back({static_cast<double>(sizes[k]), per_component_us});
    series << sizes[k] << ":" << fixed(per_component_us, 1) << "us ";
  }
  const double slope = loglog_slope(points);
  return {whole < 10.0 && slope <= 1.2,
          std::to_string(apps * components) + " components analyzed in " + fixed(whole) + " s (" +
              std::to_string(result.report.critical_flows.size()) + " flows); slice exponent " +
              fixed(slope, 2) + " [" + series.str() + "]"};
}

Outcome risk_model() {
  const Criticality crits[] = {Criticality::Low, Criticality::Medium, Criticality::High};
  const AttackComplexity cxs[] = {AttackComplexity::Medium, AttackComplexity::High, AttackComplexity::VeryHigh};
  const std::map<Criticality, int> impact{{Criticality::Low, 1}, {Criticality::Medium, 2}, {Criticality::High, 3}};
  const std::map<AttackComplexity, int> probability{
      {AttackComplexity::VeryHigh, 1}, {AttackComplexity::High, 2}, {AttackComplexity::Medium, 3}};
  auto expected_label = [](int risk) {
    return risk <= 2 ? RiskLabel::Low : risk <= 4 ? RiskLabel::Medium : RiskLabel::High;
  };
  bool mapping = true;
  std::vector<RiskScore> scores;
  for (auto c : crits) {
    for (auto a : cxs) {
      CriticalFlow f;
      f.criticality = c;
      f.complexity = a;
      const auto s = score_flow(f);
      const int risk = impact.at(c) * probability.at(a);
      mapping = mapping && s.impact == impact.at(c) && s.probability == probability.at(a) && s.risk == risk &&
                s.label == expected_label(risk);
      scores.push_back(s);
    }
  }
  const int max_risk = score_levels(Criticality::High, AttackComplexity::Medium).risk;
  int at_max = 0;
  for (const auto& s : scores) at_max += s.risk >= max_risk;
  const bool strict_max = max_risk == 9 && at_max == 1;

  bool invariant = true;
  for (const auto& x : scores) {
    for (const auto& y : scores) {
      const int xs = x.impact * x.impact * x.probability * x.probability;
      const int ys = y.impact * y.impact * y.probability * y.probability;
      invariant = invariant && ((x.risk < y.risk) == (xs < ys)) && ((x.risk == y.risk) == (xs == ys));
    }
  }
  return {mapping && strict_max && invariant,
          std::string("9 combinations ") + (mapping ? "match" : "differ") + ", max pair (high, medium) = " +
              std::to_string(max_risk) + (strict_max ? " strictly greatest" : " not unique") + ", rank order " +
              (invariant ? "unchanged" : "changed") + " under {1,4,9}"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"case-study reproduction", case_study},
      {"scenario detection", scenarios},
      {"slicer oracle equivalence", slicer_oracle},
      {"composition monotonicity", monotonicity},
      {"determinism", determinism},
      {"scalability", scalability},
      {"risk model", risk_model},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
