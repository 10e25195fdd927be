#pragma once

// Serialization of machines and analysis results: Fsm JSON, report JSON and
// Graphviz DOT.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vchain/model.hpp"
#include "vchain/reachability.hpp"

namespace vchain {

inline constexpr int kFsmFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

/// Fsm on disk: the states as ingested plus the computed indices.
nlohmann::json fsm_to_json(const Fsm& fsm);
std::string serialize_fsm(const Fsm& fsm);
/// Rebuilds the machine from its states and checks the stored ids and
/// indices against a fresh derivation. Throws SchemaViolation on mismatch.
Fsm parse_fsm(std::string_view document);

struct UnreachableGoal {
  StateId state;
  /// Preconditions that were not true when the analysis stopped.
  std::set<ConditionId> missing;
  /// Root causes behind `missing`: false conditions in the goal's backward
  /// cone that no state can produce (unassumed user actions, conditions only
  /// ever claimed as false positives, facts nobody reported).
  std::set<ConditionId> blocking;

  friend bool operator==(const UnreachableGoal&, const UnreachableGoal&) = default;
};

struct FsmSummary {
  std::size_t states = 0;  // excluding the start state
  std::size_t edges = 0;   // distinct structural (from, to) pairs
  std::size_t goals = 0;

  friend bool operator==(const FsmSummary&, const FsmSummary&) = default;
};

struct AnalysisReport {
  std::string site;
  FsmSummary summary;
  Semantics semantics = Semantics::FixedPoint;
  /// visited/true_conditions/provenance/firing_order/assumptions of the run.
  ReachResult reach;
  std::set<StateId> reachable_goals;
  std::vector<UnreachableGoal> unreachable_goals;
  ChainingReport chaining;
  std::vector<AttackPath> witnesses;
  /// State id -> display name for every state the report mentions.
  std::map<std::string, std::string> state_labels;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

AnalysisReport to_report(const Fsm& fsm, const ReachResult& result, const std::vector<AttackPath>& witnesses,
                         Semantics semantics);

/// reach + a witness per reachable goal + to_report. Every witness is replayed
/// before it is returned; a failing replay is a logic_error.
AnalysisReport analyze(const Fsm& fsm, const ReachParams& params);

nlohmann::json report_to_json(const AnalysisReport& report);
std::string serialize_report(const AnalysisReport& report);
AnalysisReport parse_report(std::string_view document);

/// "goals reached: <reached>/<total>"
std::string goals_line(const AnalysisReport& report);

/// Graphviz digraph. Start is a double circle, goals are filled red, visited
/// states (when a result is given) are bold, user-action preconditions are
/// dashed edges from point nodes and false-positive postconditions are dashed
/// red edges. Output is byte-deterministic.
std::string to_dot(const Fsm& fsm, const ReachResult* result = nullptr);

}  // namespace vchain
