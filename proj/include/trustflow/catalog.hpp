#pragma once

// Classification tables for framework APIs: IPC mechanisms, data sources with
// their criticality, data sinks with their attack complexity, and the
// lifecycle methods through which the OS enters each component kind.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "trustflow/app_model.hpp"
#include "trustflow/error.hpp"
#include "trustflow/json_util.hpp"

namespace trustflow {

enum class Criticality { Low, Medium, High };
enum class AttackComplexity { Medium, High, VeryHigh };
enum class Resolution { Explicit, ImplicitAction, Broadcast };

constexpr std::string_view to_string(Criticality c) noexcept {
  switch (c) {
    case Criticality::Low: return "low";
    case Criticality::Medium: return "medium";
    case Criticality::High: return "high";
  }
  return "low";
}

constexpr std::string_view to_string(AttackComplexity c) noexcept {
  switch (c) {
    case AttackComplexity::Medium: return "medium";
    case AttackComplexity::High: return "high";
    case AttackComplexity::VeryHigh: return "very_high";
  }
  return "medium";
}

constexpr std::string_view to_string(Resolution r) noexcept {
  switch (r) {
    case Resolution::Explicit: return "explicit";
    case Resolution::ImplicitAction: return "implicit_action";
    case Resolution::Broadcast: return "broadcast";
  }
  return "explicit";
}

inline std::optional<Criticality> parse_criticality(std::string_view s) {
  if (s == "low") return Criticality::Low;
  if (s == "medium") return Criticality::Medium;
  if (s == "high") return Criticality::High;
  return std::nullopt;
}

inline std::optional<AttackComplexity> parse_attack_complexity(std::string_view s) {
  if (s == "medium") return AttackComplexity::Medium;
  if (s == "high") return AttackComplexity::High;
  if (s == "very_high") return AttackComplexity::VeryHigh;
  return std::nullopt;
}

inline std::optional<Resolution> parse_resolution(std::string_view s) {
  if (s == "explicit") return Resolution::Explicit;
  if (s == "implicit_action") return Resolution::ImplicitAction;
  if (s == "broadcast") return Resolution::Broadcast;
  return std::nullopt;
}

namespace api {

struct Neutral {
  friend bool operator==(const Neutral&, const Neutral&) = default;
};

struct Source {
  Criticality criticality;
  std::string channel;  // human-readable incoming channel, e.g. "Location Manager"
  friend bool operator==(const Source&, const Source&) = default;
};

struct Sink {
  AttackComplexity complexity;
  std::string channel;
  friend bool operator==(const Sink&, const Sink&) = default;
};

struct IpcOut {
  Resolution resolution;
  // When set, the message is received by IpcIn statements of this api name in
  // the target component instead of by its lifecycle methods.
  std::optional<std::string> delivers_to;
  friend bool operator==(const IpcOut&, const IpcOut&) = default;
};

struct IpcIn {
  friend bool operator==(const IpcIn&, const IpcIn&) = default;
};

}  // namespace api

using ApiClass = std::variant<api::Neutral, api::Source, api::Sink, api::IpcOut, api::IpcIn>;

inline bool is_neutral(const ApiClass& c) { return std::holds_alternative<api::Neutral>(c); }

class ApiCatalog {
 public:
  /// Throws Error(DuplicateApi) when `name` is already classified.
  void add(std::string name, ApiClass cls) {
    if (name.empty()) {
      throw Error(ErrorCode::Schema, "api name must not be empty");
    }
    if (!entries_.emplace(name, std::move(cls)).second) {
      throw Error(ErrorCode::DuplicateApi, "\"" + name + "\"");
    }
  }

  void add_lifecycle(ComponentKind kind, std::string method) {
    lifecycle_[kind].insert(std::move(method));
  }

  /// Total: names absent from the catalog are Neutral.
  const ApiClass& classify(std::string_view name) const {
    static const ApiClass neutral = api::Neutral{};
    auto it = entries_.find(name);
    return it == entries_.end() ? neutral : it->second;
  }

  bool is_lifecycle(ComponentKind kind, std::string_view method) const {
    auto it = lifecycle_.find(kind);
    return it != lifecycle_.end() && it->second.find(std::string(method)) != it->second.end();
  }

  const std::map<std::string, ApiClass, std::less<>>& entries() const { return entries_; }
  const std::map<ComponentKind, std::set<std::string>>& lifecycle() const { return lifecycle_; }

  /// Stable content hash, reported in the analysis digest.
  std::string digest() const;

 private:
  std::map<std::string, ApiClass, std::less<>> entries_;
  std::map<ComponentKind, std::set<std::string>> lifecycle_;
};

inline const ApiClass& classify_api(const ApiCatalog& catalog, std::string_view name) {
  return catalog.classify(name);
}

inline json catalog_to_json(const ApiCatalog& catalog) {
  json apis = json::array();
  for (const auto& [name, cls] : catalog.entries()) {
    json entry = {{"name", name}};
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, api::Source>) {
            entry["class"] = "source";
            entry["level"] = to_string(c.criticality);
            if (!c.channel.empty()) entry["channel"] = c.channel;
          } else if constexpr (std::is_same_v<T, api::Sink>) {
            entry["class"] = "sink";
            entry["level"] = to_string(c.complexity);
            if (!c.channel.empty()) entry["channel"] = c.channel;
          } else if constexpr (std::is_same_v<T, api::IpcOut>) {
            entry["class"] = "ipc_out";
            entry["resolution"] = to_string(c.resolution);
            if (c.delivers_to) entry["delivers_to"] = *c.delivers_to;
          } else if constexpr (std::is_same_v<T, api::IpcIn>) {
            entry["class"] = "ipc_in";
          }
        },
        cls);
    if (entry.contains("class")) {
      apis.push_back(std::move(entry));
    }
  }
  json lifecycle = json::object();
  for (const auto& [kind, methods] : catalog.lifecycle()) {
    lifecycle[std::string(to_string(kind))] = methods;
  }
  return {{"apis", apis}, {"lifecycle", lifecycle}};
}

inline std::string ApiCatalog::digest() const {
  return detail::hex64(detail::fnv1a(catalog_to_json(*this).dump()));
}

inline ApiCatalog catalog_from_json(const json& doc) {
  using namespace detail;
  expect_keys(doc, {"apis", "lifecycle"}, "catalog");
  ApiCatalog catalog;
  const auto& apis = get_array(doc, "apis", "catalog");
  for (std::size_t i = 0; i < apis.size(); ++i) {
    const std::string at = "apis[" + std::to_string(i) + "]";
    const auto& e = apis[i];
    expect_keys(e, {"name", "class", "level", "resolution", "channel", "delivers_to"}, at);
    auto name = get_string(e, "name", at);
    const auto cls = get_string(e, "class", at);
    const auto level = get_optional_string(e, "level", at);
    const auto channel = get_optional_string(e, "channel", at).value_or("");
    ApiClass parsed;
    if (cls == "source") {
      if (!level) throw Error(ErrorCode::Schema, at + ": source requires a level");
      auto c = parse_criticality(*level);
      if (!c) throw Error(ErrorCode::UnknownLevel, at + ": \"" + *level + "\" for source");
      parsed = api::Source{*c, channel};
    } else if (cls == "sink") {
      if (!level) throw Error(ErrorCode::Schema, at + ": sink requires a level");
      auto c = parse_attack_complexity(*level);
      if (!c) throw Error(ErrorCode::UnknownLevel, at + ": \"" + *level + "\" for sink");
      parsed = api::Sink{*c, channel};
    } else if (cls == "ipc_out") {
      const auto res = get_optional_string(e, "resolution", at);
      if (!res) throw Error(ErrorCode::Schema, at + ": ipc_out requires a resolution");
      auto r = parse_resolution(*res);
      if (!r) throw Error(ErrorCode::Schema, at + ": unknown resolution \"" + *res + "\"");
      parsed = api::IpcOut{*r, get_optional_string(e, "delivers_to", at)};
    } else if (cls == "ipc_in") {
      parsed = api::IpcIn{};
    } else {
      throw Error(ErrorCode::Schema, at + ": unknown class \"" + cls + "\"");
    }
    catalog.add(std::move(name), std::move(parsed));
  }

  const auto& lifecycle = require(doc, "lifecycle", "catalog");
  expect_object(lifecycle, "catalog.lifecycle");
  for (const auto& [kind_text, methods] : lifecycle.items()) {
    auto kind = parse_component_kind(kind_text);
    if (!kind) {
      throw Error(ErrorCode::Schema, "catalog.lifecycle: unknown component kind \"" + kind_text + "\"");
    }
    for (auto& m : as_string_array(methods, "catalog.lifecycle." + kind_text)) {
      catalog.add_lifecycle(*kind, std::move(m));
    }
  }
  return catalog;
}

inline ApiCatalog load_catalog(std::string_view text) {
  return catalog_from_json(detail::parse_document(text));
}

/// Shipped default tables.
inline constexpr std::string_view kDefaultCatalog = R"json({
  "apis": [
    {"name": "startActivity", "class": "ipc_out", "resolution": "explicit"},
    {"name": "startActivityForResult", "class": "ipc_out", "resolution": "explicit"},
    {"name": "sendBroadcast", "class": "ipc_out", "resolution": "broadcast"},
    {"name": "sendStickyBroadcast", "class": "ipc_out", "resolution": "broadcast"},
    {"name": "sendOrderedBroadcast", "class": "ipc_out", "resolution": "broadcast"},
    {"name": "startService", "class": "ipc_out", "resolution": "implicit_action"},
    {"name": "stopService", "class": "ipc_out", "resolution": "implicit_action"},
    {"name": "bindService", "class": "ipc_out", "resolution": "implicit_action"},
    {"name": "RemoteCallback.send", "class": "ipc_out", "resolution": "explicit",
     "delivers_to": "RemoteCallback.receive"},
    {"name": "getIntent", "class": "ipc_in"},
    {"name": "RemoteCallback.receive", "class": "ipc_in"},

    {"name": "ContentProvider.read", "class": "source", "level": "high", "channel": "Content Provider"},
    {"name": "SMS.receive", "class": "source", "level": "high", "channel": "SMS/MMS"},
    {"name": "UserInput.read", "class": "source", "level": "high", "channel": "User input"},
    {"name": "File.read", "class": "source", "level": "high", "channel": "Files"},
    {"name": "Http.read", "class": "source", "level": "high", "channel": "Network (HTTP)"},
    {"name": "Bluetooth.receive", "class": "source", "level": "high", "channel": "Bluetooth"},
    {"name": "Camera.takePicture", "class": "source", "level": "medium", "channel": "Camera"},
    {"name": "C2DM.receive", "class": "source", "level": "medium", "channel": "C2DM"},
    {"name": "LocationManager.getLastKnownLocation", "class": "source", "level": "medium",
     "channel": "Location Manager"},
    {"name": "LocationManager.requestLocationUpdates", "class": "source", "level": "medium",
     "channel": "Location Manager"},
    {"name": "TelephonyManager.getDeviceId", "class": "source", "level": "medium",
     "channel": "Device identifiers"},

    {"name": "WebView.loadUrl", "class": "sink", "level": "medium", "channel": "Network (WebView)"},
    {"name": "SMS.send", "class": "sink", "level": "medium", "channel": "SMS/MMS"},
    {"name": "Bluetooth.send", "class": "sink", "level": "high", "channel": "Bluetooth"},
    {"name": "ContentProvider.write", "class": "sink", "level": "high", "channel": "Content Provider"},
    {"name": "File.write", "class": "sink", "level": "high", "channel": "Files"},
    {"name": "GoogleTranslate.translate", "class": "sink", "level": "very_high",
     "channel": "Google Translate API"},
    {"name": "MapView.setCenter", "class": "sink", "level": "very_high", "channel": "MapView"}
  ],
  "lifecycle": {
    "Activity": ["onCreate"],
    "Service": ["onStartCommand", "onBind"],
    "BroadcastReceiver": ["onReceive"],
    "ContentProvider": ["query", "insert", "update", "delete"]
  }
})json";

inline const ApiCatalog& default_catalog() {
  static const ApiCatalog catalog = load_catalog(kDefaultCatalog);
  return catalog;
}

}  // namespace trustflow
