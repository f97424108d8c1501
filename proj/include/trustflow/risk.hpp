#pragma once

// Risk = Probability x Impact over ordinal scales, plus a per-edge audit of
// permission enforcement along critical flows.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustflow/arch_scan.hpp"
#include "trustflow/catalog.hpp"
#include "trustflow/flowgraph.hpp"

namespace trustflow {

enum class RiskLabel { Low, Medium, High };

constexpr std::string_view to_string(RiskLabel l) noexcept {
  switch (l) {
    case RiskLabel::Low: return "low";
    case RiskLabel::Medium: return "medium";
    case RiskLabel::High: return "high";
  }
  return "low";
}

inline std::optional<RiskLabel> parse_risk_label(std::string_view s) {
  for (auto l : {RiskLabel::Low, RiskLabel::Medium, RiskLabel::High}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

/// Source criticality as impact: low 1, medium 2, high 3.
constexpr int impact_of(Criticality c) noexcept {
  switch (c) {
    case Criticality::Low: return 1;
    case Criticality::Medium: return 2;
    case Criticality::High: return 3;
  }
  return 1;
}

/// Sink attack complexity as probability, inverted: very_high 1, high 2, medium 3.
constexpr int probability_of(AttackComplexity c) noexcept {
  switch (c) {
    case AttackComplexity::VeryHigh: return 1;
    case AttackComplexity::High: return 2;
    case AttackComplexity::Medium: return 3;
  }
  return 1;
}

constexpr RiskLabel label_of(int risk) noexcept {
  if (risk <= 2) return RiskLabel::Low;
  if (risk <= 4) return RiskLabel::Medium;
  return RiskLabel::High;
}

struct RiskScore {
  int impact = 1;
  int probability = 1;
  int risk = 1;
  RiskLabel label = RiskLabel::Low;
  friend bool operator==(const RiskScore&, const RiskScore&) = default;
};

constexpr RiskScore score_levels(Criticality criticality, AttackComplexity complexity) noexcept {
  const int impact = impact_of(criticality);
  const int probability = probability_of(complexity);
  return {impact, probability, impact * probability, label_of(impact * probability)};
}

inline RiskScore score_flow(const CriticalFlow& flow) {
  return score_levels(flow.criticality, flow.complexity);
}

// ---------------------------------------------------------------------------

enum class PermissionVerdict { Guarded, Unguarded, SharedUid };

constexpr std::string_view to_string(PermissionVerdict v) noexcept {
  switch (v) {
    case PermissionVerdict::Guarded: return "guarded";
    case PermissionVerdict::Unguarded: return "unguarded";
    case PermissionVerdict::SharedUid: return "shared_uid";
  }
  return "unguarded";
}

inline std::optional<PermissionVerdict> parse_permission_verdict(std::string_view s) {
  for (auto v : {PermissionVerdict::Guarded, PermissionVerdict::Unguarded,
                 PermissionVerdict::SharedUid}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct PermissionFinding {
  std::string flow;  // CriticalFlow::key()
  std::string from;  // exit point id
  std::string to;    // entry point id
  std::string caller_app;
  std::string target_app;
  std::string target_component;
  PermissionVerdict verdict = PermissionVerdict::Unguarded;
  std::string detail;

  friend bool operator==(const PermissionFinding&, const PermissionFinding&) = default;
};

/// One finding per inter-component edge of `flow`, in path order.
inline std::vector<PermissionFinding> permission_boundaries(const CriticalFlow& flow,
                                                            const FlowGraph& graph,
                                                            const ComponentIndex& index) {
  std::vector<PermissionFinding> out;
  for (const auto& e : flow.path) {
    if (e.kind != EdgeKind::Ipc) continue;
    const FlowNode* from = graph.find(e.from);
    const FlowNode* to = graph.find(e.to);
    if (from == nullptr || to == nullptr) continue;
    PermissionFinding f;
    f.flow = flow.key();
    f.from = e.from;
    f.to = e.to;
    f.caller_app = from->app;
    f.target_app = to->app;
    f.target_component = to->component;

    const AppBundle* caller = index.find_app(from->app);
    const ComponentRef* target = index.find(to->app, to->component);
    if (caller == nullptr || target == nullptr) {
      f.verdict = PermissionVerdict::Unguarded;
      f.detail = "target component not in ecosystem";
    } else if (caller->app_id != target->app_id() && shares_user_id(*caller, *target->app)) {
      f.verdict = PermissionVerdict::SharedUid;
      f.detail = "apps share user id \"" + *caller->shared_user_id + "\"";
    } else if (const auto& perm = target->component->required_permission) {
      f.verdict = PermissionVerdict::Guarded;
      f.detail = "requires " + *perm + (caller->holds(*perm) ? ", held by " : ", not held by ") +
                 caller->app_id;
    } else {
      f.verdict = PermissionVerdict::Unguarded;
      f.detail = target->component->exported ? "exported without permission requirement"
                                             : "no permission requirement";
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace trustflow
