#pragma once

// Fixture ecosystems for the attack scenarios and the public-transport case
// study: (a) one app reads and leaks; (b) reading and sending are split over
// two apps linked by IPC; (c) a malicious reader drives an unguarded
// forwarder that holds the sink permission.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustflow/app_model.hpp"
#include "trustflow/error.hpp"

namespace trustflow {

enum class ScenarioKind { A, B, C, CaseStudy };

constexpr std::string_view to_string(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::A: return "a";
    case ScenarioKind::B: return "b";
    case ScenarioKind::C: return "c";
    case ScenarioKind::CaseStudy: return "case_study";
  }
  return "a";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  for (auto k : {ScenarioKind::A, ScenarioKind::B, ScenarioKind::C, ScenarioKind::CaseStudy}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace build {

inline Statement constant(std::string def) { return {ConstStmt{std::move(def)}}; }

inline Statement assign(std::string def, std::vector<std::string> uses) {
  return {AssignStmt{std::move(def), std::move(uses)}};
}

inline Statement call(std::optional<std::string> def, std::string callee,
                      std::vector<std::string> args) {
  return {CallStmt{std::move(def), std::move(callee), std::move(args)}};
}

inline Statement invoke(std::optional<std::string> def, std::string name,
                     std::vector<std::string> args = {},
                     std::optional<std::string> target = std::nullopt) {
  return {ApiStmt{std::move(def), std::move(name), std::move(args), std::move(target)}};
}

inline Component component(std::string name, ComponentKind kind, bool exported,
                           std::vector<std::string> filters, std::vector<Method> methods,
                           std::optional<std::string> permission = std::nullopt) {
  Component c;
  c.name = std::move(name);
  c.kind = kind;
  c.exported = exported;
  c.required_permission = std::move(permission);
  c.intent_filters = std::move(filters);
  c.methods = std::move(methods);
  return c;
}

inline AppBundle app(std::string id, std::set<std::string> permissions,
                     std::vector<Component> components) {
  AppBundle a;
  a.app_id = std::move(id);
  a.granted_permissions = std::move(permissions);
  a.components = std::move(components);
  return a;
}

}  // namespace build

inline std::vector<AppBundle> scenario_a() {
  using namespace build;
  return {app("ContactSync", {"android.permission.READ_CONTACTS", "android.permission.INTERNET"},
              {component("SyncActivity", ComponentKind::Activity, true, {"android.intent.action.MAIN"},
                         {Method{"onCreate",
                                 {"savedState"},
                                 {invoke("contacts", "ContentProvider.read"),
                                  invoke(std::nullopt, "WebView.loadUrl", {"contacts"})}}})})};
}

inline std::vector<AppBundle> scenario_b() {
  using namespace build;
  return {app("DeviceInfo", {"android.permission.READ_PHONE_STATE"},
              {component("InfoActivity", ComponentKind::Activity, true, {"android.intent.action.MAIN"},
                         {Method{"onCreate",
                                 {"savedState"},
                                 {invoke("imei", "TelephonyManager.getDeviceId"),
                                  invoke(std::nullopt, "startService", {"imei"},
                                      "com.example.SEND_REPORT")}}})}),
          app("SmsReporter", {"android.permission.SEND_SMS"},
              {component("ReportService", ComponentKind::Service, true, {"com.example.SEND_REPORT"},
                         {Method{"onStartCommand",
                                 {"intent"},
                                 {constant("number"),
                                  invoke(std::nullopt, "SMS.send", {"number", "intent"})}}})})};
}

inline std::vector<AppBundle> scenario_c() {
  using namespace build;
  return {app("Wallpapers", {"android.permission.READ_CONTACTS"},
              {component("GalleryActivity", ComponentKind::Activity, true,
                         {"android.intent.action.MAIN"},
                         {Method{"onCreate",
                                 {"savedState"},
                                 {invoke("contacts", "ContentProvider.read"),
                                  invoke(std::nullopt, "startActivity", {"contacts"},
                                      "LinkViewer/OpenLinkActivity")}}})}),
          app("LinkViewer", {"android.permission.INTERNET"},
              {component("OpenLinkActivity", ComponentKind::Activity, true,
                         {"android.intent.action.VIEW"},
                         {Method{"onCreate",
                                 {"savedState"},
                                 {invoke("link", "getIntent"),
                                  invoke(std::nullopt, "WebView.loadUrl", {"link"})}}})})};
}

inline std::vector<AppBundle> scenario_case_study() {
  using namespace build;
  auto pubtrans = app(
      "PubTrans", {"android.permission.INTERNET"},
      {component("MainActivity", ComponentKind::Activity, true, {"android.intent.action.MAIN"},
                 {Method{"onCreate",
                         {"savedState"},
                         {constant("conn"),
                          invoke(std::nullopt, "bindService", {"conn"}, "com.pubtrans.GET_LOCATION")}},
                  Method{"onLocationResult",
                         {},
                         {invoke("location", "RemoteCallback.receive"), constant("destination"),
                          assign("extras", {"location", "destination"}),
                          invoke(std::nullopt, "startActivity", {"extras"},
                              "PubTrans/ResultWebView")}}}),
       component("ResultWebView", ComponentKind::Activity, false, {},
                 {Method{"onCreate",
                         {"savedState"},
                         {invoke("extras", "getIntent"), call(std::nullopt, "loadResults", {"extras"})}},
                  Method{"loadResults",
                         {"extras"},
                         {invoke("url", "buildUrl", {"extras"}),
                          invoke(std::nullopt, "WebView.loadUrl", {"url"})}}})});
  auto location = app(
      "PubTransLocation", {"android.permission.ACCESS_FINE_LOCATION"},
      {component("LocationService", ComponentKind::Service, true, {"com.pubtrans.GET_LOCATION"},
                 {Method{"onBind",
                         {"intent"},
                         {invoke("location", "LocationManager.getLastKnownLocation"),
                          assign("callback", {"intent"}),
                          invoke(std::nullopt, "RemoteCallback.send", {"callback", "location"},
                              "PubTrans/MainActivity")}}})});
  return {std::move(pubtrans), std::move(location)};
}

inline std::vector<AppBundle> make_scenario(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::A: return scenario_a();
    case ScenarioKind::B: return scenario_b();
    case ScenarioKind::C: return scenario_c();
    case ScenarioKind::CaseStudy: return scenario_case_study();
  }
  return {};
}

/// Writes one `<app_id>.json` bundle per app into `dir`, creating it if
/// needed, and returns the written paths in app order.
inline std::vector<std::filesystem::path> write_scenario(ScenarioKind kind,
                                                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  for (const auto& bundle : make_scenario(kind)) {
    auto path = dir / (bundle.app_id + ".json");
    std::ofstream file(path, std::ios::binary);
    file << serialize_bundle(bundle);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace trustflow
