#pragma once

// Goal reachability over an attack state machine.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "vchain/model.hpp"

namespace vchain {

enum class Semantics {
  /// Least fixed point: fire every state whose preconditions hold, repeat
  /// until nothing changes. The normative semantics.
  FixedPoint,
  /// Recursive descent from the start state along FSM edges, one pass. Kept
  /// for comparison; never visits more than FixedPoint.
  PaperDfs,
};

std::string_view to_string(Semantics semantics);
std::optional<Semantics> parse_semantics(std::string_view text);

struct ReachParams {
  Semantics semantics = Semantics::FixedPoint;
  AssumptionSet assumptions;
  std::size_t max_states = 100000;
};

/// Whether `state` may fire given the currently true conditions. A
/// user-action precondition also accepts an assumed condition.
bool is_enabled(const AttackState& state, const std::set<ConditionId>& true_conditions,
                const std::set<ConditionId>& assumptions);

/// Throws InvalidAssumption, StateBoundExceeded, or SchemaViolation for
/// max_states == 0.
ReachResult reach(const Fsm& fsm, const ReachParams& params = {});

/// Visited goal states. Throws ResultFsmMismatch for ids not in fsm.
std::set<StateId> collect_goals(const ReachResult& result, const Fsm& fsm);

/// Walks provenance back from `goal`, choosing for every needed condition
/// the producer that fired first, and returns those states in firing order.
/// Not necessarily the shortest path. Throws GoalNotReached.
AttackPath extract_witness(const Fsm& fsm, const ReachResult& result, const StateId& goal);

/// Replays `path` from the initial conditions plus its assumptions. Returns
/// an explanation of the first failing step, or nullopt when it replays.
std::optional<std::string> check_witness(const Fsm& fsm, const AttackPath& path);

struct ChainingReport {
  /// Goals reached with unrestricted chaining.
  std::set<StateId> chained;
  /// Goals that fire directly from the environment facts and assumptions.
  std::set<StateId> isolated;
  /// chained \ isolated: harm only combinations of vulnerabilities reach.
  std::set<StateId> difference;

  friend bool operator==(const ChainingReport&, const ChainingReport&) = default;
};

ChainingReport diff_isolated_vs_chained(const Fsm& fsm, const ReachParams& params = {});

}  // namespace vchain
