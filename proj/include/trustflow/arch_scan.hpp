#pragma once

// Architectural layer. Identifies components and, per component, the points
// where data enters (lifecycle methods, IPC-in and source calls) or leaves
// (IPC-out and sink calls). The result is handed to the slicer as an exchange
// document.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "trustflow/app_model.hpp"
#include "trustflow/catalog.hpp"
#include "trustflow/json_util.hpp"

namespace trustflow {

enum class PointRole { Entry, Exit };
enum class PointOrigin { Lifecycle, IpcInApi, SourceApi, IpcOutApi, SinkApi };

constexpr std::string_view to_string(PointRole r) noexcept {
  return r == PointRole::Entry ? "entry" : "exit";
}

constexpr std::string_view to_string(PointOrigin o) noexcept {
  switch (o) {
    case PointOrigin::Lifecycle: return "lifecycle";
    case PointOrigin::IpcInApi: return "ipc_in";
    case PointOrigin::SourceApi: return "source";
    case PointOrigin::IpcOutApi: return "ipc_out";
    case PointOrigin::SinkApi: return "sink";
  }
  return "lifecycle";
}

inline std::optional<PointOrigin> parse_point_origin(std::string_view s) {
  for (auto o : {PointOrigin::Lifecycle, PointOrigin::IpcInApi, PointOrigin::SourceApi,
                 PointOrigin::IpcOutApi, PointOrigin::SinkApi}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

struct IpcPoint {
  std::string id;
  PointRole role = PointRole::Entry;
  PointOrigin origin = PointOrigin::Lifecycle;
  std::string app;
  std::string component;
  std::string method;
  std::optional<std::size_t> statement_index;
  std::optional<std::string> api_name;
  std::optional<std::string> target;  // literal target of the api statement
  /// Entry: variables defined at the point. Exit: variables used by it.
  std::vector<std::string> variables;
  /// Lifecycle entries only: indices of IPC-in statements of the same method
  /// whose definitions the entry carries.
  std::vector<std::size_t> folded;

  friend bool operator==(const IpcPoint&, const IpcPoint&) = default;
};

inline std::string component_key(std::string_view app, std::string_view component) {
  return std::string(app) + "/" + std::string(component);
}

inline std::string lifecycle_point_id(std::string_view app, std::string_view component,
                                      std::string_view method) {
  return component_key(app, component) + "/" + std::string(method) + "#entry";
}

inline std::string statement_point_id(std::string_view app, std::string_view component,
                                      std::string_view method, std::size_t index, PointRole role) {
  return component_key(app, component) + "/" + std::string(method) + "#" +
         std::to_string(index) + ":" + std::string(to_string(role));
}

// ---------------------------------------------------------------------------

struct ComponentRef {
  const AppBundle* app = nullptr;
  const Component* component = nullptr;

  const std::string& app_id() const { return app->app_id; }
  const std::string& name() const { return component->name; }
  std::string key() const { return component_key(app_id(), name()); }
};

/// All (app, component) pairs of an ecosystem, ordered by (app id, name).
/// Refers into the bundles it was built from, which must outlive it.
class ComponentIndex {
 public:
  ComponentIndex() = default;
  explicit ComponentIndex(std::vector<ComponentRef> refs) : refs_(std::move(refs)) {
    std::sort(refs_.begin(), refs_.end(), [](const ComponentRef& a, const ComponentRef& b) {
      return std::tie(a.app_id(), a.name()) < std::tie(b.app_id(), b.name());
    });
  }

  std::span<const ComponentRef> components() const { return refs_; }
  std::size_t size() const { return refs_.size(); }
  bool empty() const { return refs_.empty(); }

  const ComponentRef* find(std::string_view app, std::string_view component) const {
    auto it = std::lower_bound(refs_.begin(), refs_.end(), std::pair{app, component},
                               [](const ComponentRef& r, const auto& key) {
                                 return std::pair<std::string_view, std::string_view>(
                                            r.app_id(), r.name()) < key;
                               });
    if (it != refs_.end() && it->app_id() == app && it->name() == component) {
      return &*it;
    }
    return nullptr;
  }

  const AppBundle* find_app(std::string_view app) const {
    for (const auto& r : refs_) {
      if (r.app_id() == app) return r.app;
    }
    return nullptr;
  }

  std::vector<std::string> app_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : refs_) {
      if (ids.empty() || ids.back() != r.app_id()) ids.push_back(r.app_id());
    }
    return ids;
  }

 private:
  std::vector<ComponentRef> refs_;
};

inline ComponentIndex identify_components(std::span<const AppBundle> bundles) {
  std::vector<ComponentRef> refs;
  for (const auto& app : bundles) {
    for (const auto& comp : app.components) {
      refs.push_back({&app, &comp});
    }
  }
  return ComponentIndex(std::move(refs));
}

struct ComponentPoints {
  std::vector<IpcPoint> entries;
  std::vector<IpcPoint> exits;
};

/// Entries and exits of one component. Each lifecycle method yields one entry
/// carrying its parameters plus the definitions of IPC-in calls it makes; every
/// other classified statement yields exactly one point. Ordered by (method
/// name, statement index) with the lifecycle entry first.
inline ComponentPoints find_ipc_points(const AppBundle& app, const Component& comp,
                                       const ApiCatalog& catalog) {
  ComponentPoints out;
  std::vector<const Method*> methods;
  for (const auto& m : comp.methods) methods.push_back(&m);
  std::stable_sort(methods.begin(), methods.end(),
                   [](const Method* a, const Method* b) { return a->name < b->name; });

  for (const Method* method : methods) {
    const bool lifecycle = catalog.is_lifecycle(comp.kind, method->name);
    IpcPoint life;
    if (lifecycle) {
      life.id = lifecycle_point_id(app.app_id, comp.name, method->name);
      life.role = PointRole::Entry;
      life.origin = PointOrigin::Lifecycle;
      life.app = app.app_id;
      life.component = comp.name;
      life.method = method->name;
      life.variables = method->params;
    }
    std::vector<IpcPoint> statement_points;
    for (std::size_t i = 0; i < method->body.size(); ++i) {
      const ApiStmt* call = method->body[i].api();
      if (call == nullptr) continue;
      const ApiClass& cls = catalog.classify(call->name);
      if (is_neutral(cls)) continue;

      if (lifecycle && std::holds_alternative<api::IpcIn>(cls)) {
        life.folded.push_back(i);
        if (call->def) life.variables.push_back(*call->def);
        continue;
      }
      IpcPoint p;
      p.app = app.app_id;
      p.component = comp.name;
      p.method = method->name;
      p.statement_index = i;
      p.api_name = call->name;
      p.target = call->target;
      if (std::holds_alternative<api::Source>(cls) || std::holds_alternative<api::IpcIn>(cls)) {
        p.role = PointRole::Entry;
        p.origin = std::holds_alternative<api::Source>(cls) ? PointOrigin::SourceApi
                                                            : PointOrigin::IpcInApi;
        if (call->def) p.variables.push_back(*call->def);
      } else {
        p.role = PointRole::Exit;
        p.origin = std::holds_alternative<api::Sink>(cls) ? PointOrigin::SinkApi
                                                          : PointOrigin::IpcOutApi;
        p.variables = call->args;
      }
      p.id = statement_point_id(app.app_id, comp.name, method->name, i, p.role);
      statement_points.push_back(std::move(p));
    }
    if (lifecycle) out.entries.push_back(std::move(life));
    for (auto& p : statement_points) {
      (p.role == PointRole::Entry ? out.entries : out.exits).push_back(std::move(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exchange document

struct ExchangeComponent {
  std::string app;
  std::string name;
  ComponentKind kind = ComponentKind::Activity;
  std::vector<IpcPoint> points;  // entries then exits, each in scan order

  std::vector<IpcPoint> entries() const { return filtered(PointRole::Entry); }
  std::vector<IpcPoint> exits() const { return filtered(PointRole::Exit); }

  friend bool operator==(const ExchangeComponent&, const ExchangeComponent&) = default;

 private:
  std::vector<IpcPoint> filtered(PointRole role) const {
    std::vector<IpcPoint> out;
    for (const auto& p : points) {
      if (p.role == role) out.push_back(p);
    }
    return out;
  }
};

struct ExchangeDocument {
  std::vector<ExchangeComponent> components;  // ordered by (app, name)

  const ExchangeComponent* find(std::string_view app, std::string_view name) const {
    for (const auto& c : components) {
      if (c.app == app && c.name == name) return &c;
    }
    return nullptr;
  }

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& c : components) n += c.points.size();
    return n;
  }

  friend bool operator==(const ExchangeDocument&, const ExchangeDocument&) = default;
};

/// `points[i]` belongs to `index.components()[i]`.
inline ExchangeDocument emit_exchange(const ComponentIndex& index,
                                      std::span<const ComponentPoints> points) {
  ExchangeDocument doc;
  const auto refs = index.components();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ExchangeComponent ec{refs[i].app_id(), refs[i].name(), refs[i].component->kind, {}};
    if (i < points.size()) {
      ec.points = points[i].entries;
      ec.points.insert(ec.points.end(), points[i].exits.begin(), points[i].exits.end());
    }
    doc.components.push_back(std::move(ec));
  }
  return doc;
}

inline json point_to_json(const IpcPoint& p) {
  json j = {{"id", p.id},
            {"role", to_string(p.role)},
            {"origin", to_string(p.origin)},
            {"method", p.method},
            {"vars", p.variables}};
  if (p.statement_index) j["index"] = *p.statement_index;
  if (p.api_name) j["api"] = *p.api_name;
  if (p.target) j["target"] = *p.target;
  if (!p.folded.empty()) j["folded"] = p.folded;
  return j;
}

inline json exchange_to_json(const ExchangeDocument& doc) {
  json comps = json::array();
  for (const auto& c : doc.components) {
    json points = json::array();
    for (const auto& p : c.points) points.push_back(point_to_json(p));
    comps.push_back({{"app", c.app}, {"name", c.name}, {"kind", to_string(c.kind)},
                     {"points", points}});
  }
  return {{"components", comps}};
}

inline std::string dump_exchange(const ExchangeDocument& doc) {
  return exchange_to_json(doc).dump(2) + "\n";
}

inline ExchangeDocument exchange_from_json(const json& j) {
  using namespace detail;
  expect_keys(j, {"components"}, "exchange");
  ExchangeDocument doc;
  const auto& comps = get_array(j, "components", "exchange");
  for (std::size_t ci = 0; ci < comps.size(); ++ci) {
    const std::string at = "components[" + std::to_string(ci) + "]";
    const auto& cj = comps[ci];
    expect_keys(cj, {"app", "name", "kind", "points"}, at);
    ExchangeComponent ec;
    ec.app = get_string(cj, "app", at);
    ec.name = get_string(cj, "name", at);
    const auto kind = parse_component_kind(get_string(cj, "kind", at));
    if (!kind) throw Error(ErrorCode::Schema, at + ".kind: unknown component kind");
    ec.kind = *kind;
    const auto& points = get_array(cj, "points", at);
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      const std::string pat = at + ".points[" + std::to_string(pi) + "]";
      const auto& pj = points[pi];
      expect_keys(pj, {"id", "role", "origin", "method", "index", "api", "target", "vars", "folded"},
                  pat);
      IpcPoint p;
      p.id = get_string(pj, "id", pat);
      const auto role = get_string(pj, "role", pat);
      if (role != "entry" && role != "exit") {
        throw Error(ErrorCode::Schema, pat + ".role: expected entry|exit");
      }
      p.role = role == "entry" ? PointRole::Entry : PointRole::Exit;
      const auto origin = parse_point_origin(get_string(pj, "origin", pat));
      if (!origin) throw Error(ErrorCode::Schema, pat + ".origin: unknown origin");
      p.origin = *origin;
      p.app = ec.app;
      p.component = ec.name;
      p.method = get_string(pj, "method", pat);
      if (auto it = pj.find("index"); it != pj.end()) {
        p.statement_index = as_index(*it, pat + ".index");
      }
      p.api_name = get_optional_string(pj, "api", pat);
      p.target = get_optional_string(pj, "target", pat);
      p.variables = get_string_array(pj, "vars", pat);
      if (auto it = pj.find("folded"); it != pj.end()) {
        if (!it->is_array()) throw Error(ErrorCode::Schema, pat + ".folded: expected array");
        for (const auto& f : *it) p.folded.push_back(as_index(f, pat + ".folded"));
      }
      ec.points.push_back(std::move(p));
    }
    doc.components.push_back(std::move(ec));
  }
  return doc;
}

inline ExchangeDocument parse_exchange(std::string_view text) {
  return exchange_from_json(detail::parse_document(text));
}

}  // namespace trustflow
