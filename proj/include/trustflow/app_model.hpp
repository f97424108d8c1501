#pragma once

// Ecosystem data model: applications, their manifests, components and the
// straight-line three-address IR their methods are written in.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "trustflow/error.hpp"
#include "trustflow/json_util.hpp"

namespace trustflow {

enum class ComponentKind { Activity, Service, ContentProvider, BroadcastReceiver };

constexpr std::string_view to_string(ComponentKind kind) noexcept {
  switch (kind) {
    case ComponentKind::Activity: return "Activity";
    case ComponentKind::Service: return "Service";
    case ComponentKind::ContentProvider: return "ContentProvider";
    case ComponentKind::BroadcastReceiver: return "BroadcastReceiver";
  }
  return "Activity";
}

inline std::optional<ComponentKind> parse_component_kind(std::string_view text) {
  for (auto kind : {ComponentKind::Activity, ComponentKind::Service,
                    ComponentKind::ContentProvider, ComponentKind::BroadcastReceiver}) {
    if (to_string(kind) == text) {
      return kind;
    }
  }
  return std::nullopt;
}

/// Name of the variable whose last definition is a method's return value.
inline constexpr std::string_view kReturnVariable = "ret";

struct ConstStmt {
  std::string def;
  friend bool operator==(const ConstStmt&, const ConstStmt&) = default;
};

struct AssignStmt {
  std::string def;
  std::vector<std::string> uses;
  friend bool operator==(const AssignStmt&, const AssignStmt&) = default;
};

struct CallStmt {
  std::optional<std::string> def;
  std::string callee;
  std::vector<std::string> args;
  friend bool operator==(const CallStmt&, const CallStmt&) = default;
};

/// Call into the framework. The name is opaque here; the catalog classifies it.
struct ApiStmt {
  std::optional<std::string> def;
  std::string name;
  std::vector<std::string> args;
  std::optional<std::string> target;
  friend bool operator==(const ApiStmt&, const ApiStmt&) = default;
};

struct Statement {
  std::variant<ConstStmt, AssignStmt, CallStmt, ApiStmt> op;

  const std::string* def() const {
    return std::visit(
        [](const auto& s) -> const std::string* {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConstStmt> || std::is_same_v<T, AssignStmt>) {
            return &s.def;
          } else {
            return s.def ? &*s.def : nullptr;
          }
        },
        op);
  }

  std::span<const std::string> uses() const {
    return std::visit(
        [](const auto& s) -> std::span<const std::string> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConstStmt>) {
            return {};
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            return s.uses;
          } else {
            return s.args;
          }
        },
        op);
  }

  const ApiStmt* api() const { return std::get_if<ApiStmt>(&op); }
  const CallStmt* call() const { return std::get_if<CallStmt>(&op); }

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct Method {
  std::string name;
  std::vector<std::string> params;
  std::vector<Statement> body;
  friend bool operator==(const Method&, const Method&) = default;
};

struct Component {
  std::string name;
  ComponentKind kind = ComponentKind::Activity;
  bool exported = false;
  std::optional<std::string> required_permission;
  std::vector<std::string> intent_filters;
  std::vector<Method> methods;

  const Method* find_method(std::string_view method) const {
    auto it = std::find_if(methods.begin(), methods.end(),
                           [&](const Method& m) { return m.name == method; });
    return it == methods.end() ? nullptr : &*it;
  }

  friend bool operator==(const Component&, const Component&) = default;
};

struct AppBundle {
  std::string app_id;
  std::set<std::string> granted_permissions;
  std::optional<std::string> shared_user_id;
  std::vector<Component> components;

  const Component* find_component(std::string_view component) const {
    auto it = std::find_if(components.begin(), components.end(),
                           [&](const Component& c) { return c.name == component; });
    return it == components.end() ? nullptr : &*it;
  }

  bool holds(std::string_view permission) const {
    return granted_permissions.find(std::string(permission)) != granted_permissions.end();
  }

  friend bool operator==(const AppBundle&, const AppBundle&) = default;
};

/// True when both apps declare the same shared user id.
inline bool shares_user_id(const AppBundle& a, const AppBundle& b) {
  return a.shared_user_id && b.shared_user_id && *a.shared_user_id == *b.shared_user_id;
}

// ---------------------------------------------------------------------------
// Bundle document (JSON)

namespace detail {

inline std::string where_at(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

inline Statement parse_statement(const json& doc, const std::string& where) {
  expect_object(doc, where);
  if (doc.size() != 1) {
    throw Error(ErrorCode::Schema, where + ": statement must have exactly one kind key");
  }
  const auto& [kind, body] = *doc.items().begin();
  const std::string at = where + "." + kind;
  if (kind == "const") {
    expect_keys(body, {"def"}, at);
    return {ConstStmt{get_string(body, "def", at)}};
  }
  if (kind == "assign") {
    expect_keys(body, {"def", "uses"}, at);
    return {AssignStmt{get_string(body, "def", at), get_string_array(body, "uses", at)}};
  }
  if (kind == "call") {
    expect_keys(body, {"def", "callee", "args"}, at);
    return {CallStmt{get_optional_string(body, "def", at), get_string(body, "callee", at),
                     get_string_array(body, "args", at)}};
  }
  if (kind == "api") {
    expect_keys(body, {"def", "name", "args", "target"}, at);
    return {ApiStmt{get_optional_string(body, "def", at), get_string(body, "name", at),
                    get_string_array(body, "args", at), get_optional_string(body, "target", at)}};
  }
  throw Error(ErrorCode::Schema, where + ": unknown statement kind \"" + std::string(kind) + "\"");
}

inline json statement_to_json(const Statement& stmt) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstStmt>) {
          return {{"const", {{"def", s.def}}}};
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          return {{"assign", {{"def", s.def}, {"uses", s.uses}}}};
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          json body = {{"callee", s.callee}, {"args", s.args}};
          if (s.def) body["def"] = *s.def;
          return {{"call", body}};
        } else {
          json body = {{"name", s.name}, {"args", s.args}};
          if (s.def) body["def"] = *s.def;
          if (s.target) body["target"] = *s.target;
          return {{"api", body}};
        }
      },
      stmt.op);
}

}  // namespace detail

inline AppBundle bundle_from_json(const json& doc) {
  using namespace detail;
  expect_keys(doc, {"app_id", "granted_permissions", "shared_user_id", "components"}, "bundle");
  AppBundle app;
  app.app_id = get_string(doc, "app_id", "bundle");
  for (auto& p : get_string_array(doc, "granted_permissions", "bundle")) {
    app.granted_permissions.insert(std::move(p));
  }
  app.shared_user_id = get_optional_string(doc, "shared_user_id", "bundle");

  const auto& components = get_array(doc, "components", "bundle");
  for (std::size_t ci = 0; ci < components.size(); ++ci) {
    const std::string cw = where_at("components", ci);
    const auto& cdoc = components[ci];
    expect_keys(cdoc,
                {"name", "kind", "exported", "required_permission", "intent_filters", "methods"},
                cw);
    Component comp;
    comp.name = get_string(cdoc, "name", cw);
    const auto kind_text = get_string(cdoc, "kind", cw);
    auto kind = parse_component_kind(kind_text);
    if (!kind) {
      throw Error(ErrorCode::Schema, cw + ".kind: unknown component kind \"" + kind_text + "\"");
    }
    comp.kind = *kind;
    comp.exported = get_bool(cdoc, "exported", cw);
    comp.required_permission = get_optional_string(cdoc, "required_permission", cw);
    comp.intent_filters = get_string_array(cdoc, "intent_filters", cw);

    const auto& methods = get_array(cdoc, "methods", cw);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string mw = cw + "." + where_at("methods", mi);
      const auto& mdoc = methods[mi];
      expect_keys(mdoc, {"name", "params", "body"}, mw);
      Method method;
      method.name = get_string(mdoc, "name", mw);
      method.params = get_string_array(mdoc, "params", mw);
      const auto& body = get_array(mdoc, "body", mw);
      for (std::size_t si = 0; si < body.size(); ++si) {
        method.body.push_back(parse_statement(body[si], mw + "." + where_at("body", si)));
      }
      comp.methods.push_back(std::move(method));
    }

    if (app.find_component(comp.name) != nullptr) {
      throw Error(ErrorCode::DuplicateComponent,
                  "\"" + comp.name + "\" in app \"" + app.app_id + "\"");
    }
    app.components.push_back(std::move(comp));
  }

  for (const auto& comp : app.components) {
    for (const auto& method : comp.methods) {
      for (std::size_t i = 0; i < method.body.size(); ++i) {
        if (const auto* call = method.body[i].call();
            call != nullptr && comp.find_method(call->callee) == nullptr) {
          throw Error(ErrorCode::UnknownCallee, "\"" + call->callee + "\" called from " +
                                                    app.app_id + "/" + comp.name + "/" +
                                                    method.name + "#" + std::to_string(i));
        }
      }
    }
  }
  return app;
}

/// Parses one bundle document. Throws Error with a distinct code for syntax
/// errors, schema violations, unknown callees and duplicate components.
inline AppBundle parse_bundle(std::string_view text) {
  return bundle_from_json(detail::parse_document(text));
}

inline json bundle_to_json(const AppBundle& app) {
  json components = json::array();
  for (const auto& comp : app.components) {
    json methods = json::array();
    for (const auto& method : comp.methods) {
      json body = json::array();
      for (const auto& stmt : method.body) {
        body.push_back(detail::statement_to_json(stmt));
      }
      methods.push_back({{"name", method.name}, {"params", method.params}, {"body", body}});
    }
    json c = {{"name", comp.name},
              {"kind", to_string(comp.kind)},
              {"exported", comp.exported},
              {"intent_filters", comp.intent_filters},
              {"methods", methods}};
    if (comp.required_permission) c["required_permission"] = *comp.required_permission;
    components.push_back(std::move(c));
  }
  json doc = {{"app_id", app.app_id},
              {"granted_permissions", app.granted_permissions},
              {"components", components}};
  if (app.shared_user_id) doc["shared_user_id"] = *app.shared_user_id;
  return doc;
}

inline std::string serialize_bundle(const AppBundle& app) {
  return bundle_to_json(app).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Ecosystem validation

enum class ViolationRule {
  DuplicateAppId,
  InvalidIdentifier,
  DuplicateComponent,
  EmptyIntentAction,
  FilterOnUnexportedComponent,
  DuplicateMethod,
  DuplicateParam,
  UndefinedVariable,
  UnknownCallee,
  ArityMismatch,
};

constexpr std::string_view to_string(ViolationRule rule) noexcept {
  switch (rule) {
    case ViolationRule::DuplicateAppId: return "duplicate-app-id";
    case ViolationRule::InvalidIdentifier: return "invalid-identifier";
    case ViolationRule::DuplicateComponent: return "duplicate-component";
    case ViolationRule::EmptyIntentAction: return "empty-intent-action";
    case ViolationRule::FilterOnUnexportedComponent: return "filter-on-unexported-component";
    case ViolationRule::DuplicateMethod: return "duplicate-method";
    case ViolationRule::DuplicateParam: return "duplicate-param";
    case ViolationRule::UndefinedVariable: return "undefined-variable";
    case ViolationRule::UnknownCallee: return "unknown-callee";
    case ViolationRule::ArityMismatch: return "arity-mismatch";
  }
  return "violation";
}

struct Violation {
  ViolationRule rule;
  std::string location;  // app[/component[/method[#index]]]
  std::string detail;

  auto operator<=>(const Violation&) const = default;
  std::string to_string() const {
    return std::string(trustflow::to_string(rule)) + " at " + location + ": " + detail;
  }
};

struct ValidationReport {
  std::vector<Violation> violations;  // sorted
  bool ok() const { return violations.empty(); }
};

inline bool is_identifier(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) {
    return false;
  }
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

namespace detail {

inline void validate_method(const AppBundle& app, const Component& comp, const Method& method,
                            std::vector<Violation>& out) {
  const std::string at = app.app_id + "/" + comp.name + "/" + method.name;
  std::set<std::string_view> defined;
  for (const auto& p : method.params) {
    if (!is_identifier(p)) {
      out.push_back({ViolationRule::InvalidIdentifier, at, "parameter \"" + p + "\""});
    }
    if (!defined.insert(p).second) {
      out.push_back({ViolationRule::DuplicateParam, at, "parameter \"" + p + "\""});
    }
  }
  for (std::size_t i = 0; i < method.body.size(); ++i) {
    const auto& stmt = method.body[i];
    const std::string sat = at + "#" + std::to_string(i);
    const std::string* def = stmt.def();
    if (def != nullptr && !is_identifier(*def)) {
      out.push_back({ViolationRule::InvalidIdentifier, sat, "definition \"" + *def + "\""});
    }
    for (const auto& use : stmt.uses()) {
      if (defined.count(use) == 0 && (def == nullptr || *def != use)) {
        out.push_back({ViolationRule::UndefinedVariable, sat, "\"" + use + "\""});
      }
    }
    if (def != nullptr) {
      defined.insert(*def);
    }
    if (const auto* call = stmt.call()) {
      const Method* callee = comp.find_method(call->callee);
      if (callee == nullptr) {
        out.push_back({ViolationRule::UnknownCallee, sat, "\"" + call->callee + "\""});
      } else if (callee->params.size() != call->args.size()) {
        out.push_back({ViolationRule::ArityMismatch, sat,
                       "\"" + call->callee + "\" takes " + std::to_string(callee->params.size()) +
                           " argument(s), given " + std::to_string(call->args.size())});
      }
    }
  }
}

}  // namespace detail

/// Checks every model invariant across the ecosystem. The result is sorted, so
/// it does not depend on the order of `bundles`.
inline ValidationReport validate_ecosystem(std::span<const AppBundle> bundles) {
  std::vector<Violation> out;
  std::map<std::string, std::size_t> app_counts;
  for (const auto& app : bundles) {
    ++app_counts[app.app_id];
  }
  for (const auto& [id, count] : app_counts) {
    if (count > 1) {
      out.push_back({ViolationRule::DuplicateAppId, id,
                     "declared by " + std::to_string(count) + " bundles"});
    }
  }

  for (const auto& app : bundles) {
    if (app.app_id.empty() || app.app_id.find('/') != std::string::npos) {
      out.push_back({ViolationRule::InvalidIdentifier, app.app_id, "app id"});
    }
    std::map<std::string_view, std::size_t> comp_counts;
    for (const auto& comp : app.components) {
      ++comp_counts[comp.name];
    }
    for (const auto& [name, count] : comp_counts) {
      if (count > 1) {
        out.push_back({ViolationRule::DuplicateComponent, app.app_id + "/" + std::string(name),
                       "declared " + std::to_string(count) + " times"});
      }
    }
    for (const auto& comp : app.components) {
      const std::string at = app.app_id + "/" + comp.name;
      if (comp.name.empty() || comp.name.find('/') != std::string::npos) {
        out.push_back({ViolationRule::InvalidIdentifier, at, "component name"});
      }
      for (const auto& action : comp.intent_filters) {
        if (action.empty()) {
          out.push_back({ViolationRule::EmptyIntentAction, at, "intent filter action is empty"});
        }
      }
      if (!comp.intent_filters.empty() && !comp.exported) {
        out.push_back({ViolationRule::FilterOnUnexportedComponent, at,
                       "component declares intent filters but is not exported"});
      }
      std::map<std::string_view, std::size_t> method_counts;
      for (const auto& method : comp.methods) {
        ++method_counts[method.name];
        detail::validate_method(app, comp, method, out);
      }
      for (const auto& [name, count] : method_counts) {
        if (count > 1) {
          out.push_back({ViolationRule::DuplicateMethod, at + "/" + std::string(name),
                         "declared " + std::to_string(count) + " times"});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return {std::move(out)};
}

}  // namespace trustflow
