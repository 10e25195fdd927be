#pragma once

// Domain types shared by every stage of the engine: conditions, URIs,
// findings, attack states and the state machine built from them.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vchain/error.hpp"

namespace vchain {

using ConditionId = std::string;

/// An atomic fact about the victim environment. Two conditions are the same
/// fact iff their normalized ids match; the label keeps the original prose.
struct Condition {
  ConditionId id;
  std::string label;

  friend bool operator==(const Condition& a, const Condition& b) { return a.id == b.id; }
  friend auto operator<=>(const Condition& a, const Condition& b) { return a.id <=> b.id; }
};

/// Lowercases ASCII, trims and collapses internal whitespace runs to one space.
/// Punctuation is preserved. Throws EmptyCondition on blank input.
Condition normalize_condition(std::string_view label);

/// Strips every punctuation character from an already-normalized id. Used to
/// flag near-miss condition pairs, never to identify conditions.
std::string strip_punctuation(std::string_view id);

/// Canonical form of a resource URI.
///
/// canonical drops any scheme and authority, percent-decodes the path, removes
/// a trailing slash (except for the root) and keeps the query verbatim. The
/// scanner sentinels "ALL URI" and "NULL" map to "*" and "" respectively.
struct NormalizedUri {
  std::string raw;
  std::string canonical;
  std::vector<std::string> segments;

  /// "/" + segments joined by "/"; empty for the sentinels.
  std::string path() const;
  /// Everything after the first '?' of canonical, without the '?'.
  std::string query() const;
  bool is_any() const { return canonical == kAnyUri; }
  bool is_null() const { return canonical.empty(); }
  bool is_sentinel() const { return is_any() || is_null(); }

  friend bool operator==(const NormalizedUri& a, const NormalizedUri& b) {
    return a.canonical == b.canonical;
  }

  static constexpr std::string_view kAnyUri = "*";
};

NormalizedUri normalize_uri(std::string_view raw);

struct PreconditionRef {
  Condition condition;
  /// Satisfiable only through victim carelessness (a dotted edge).
  bool requires_user_action = false;

  friend bool operator==(const PreconditionRef&, const PreconditionRef&) = default;
};

struct PostconditionRef {
  Condition condition;
  /// Scanner-claimed consequence that is never actually granted.
  bool false_positive = false;

  friend bool operator==(const PostconditionRef&, const PostconditionRef&) = default;
};

struct Finding {
  std::string vulnerability_name;
  NormalizedUri uri;
  std::vector<PreconditionRef> preconditions;
  std::vector<PostconditionRef> postconditions;
  bool is_goal = false;
  std::string source;
  std::string label;

  friend bool operator==(const Finding& a, const Finding& b) {
    return a.vulnerability_name == b.vulnerability_name && a.uri.raw == b.uri.raw &&
           a.preconditions == b.preconditions && a.postconditions == b.postconditions &&
           a.is_goal == b.is_goal && a.source == b.source && a.label == b.label;
  }
};

/// Checks the Finding invariants (non-empty name, no repeated condition id
/// on either side). Throws SchemaViolation naming `where`.
void validate_finding(const Finding& finding, std::string_view where);

/// Hierarchical view of the crawled resources. Nodes are stored flat and
/// addressed by canonical path; node 0 is the root "/".
class UriTree {
 public:
  struct Node {
    std::string name;
    std::string path;
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;  // sorted by child name
    bool is_resource = false;

    bool is_leaf() const { return children.empty(); }
  };

  UriTree();

  /// Adds a resource and any missing directory nodes. Returns false when the
  /// path was already present as a resource. Sentinel URIs are rejected.
  bool insert(const NormalizedUri& uri);

  bool contains(const NormalizedUri& uri) const;
  const Node* find(std::string_view path) const;

  const Node& root() const { return nodes_.front(); }
  const Node& node(std::size_t index) const { return nodes_.at(index); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Paths of all leaves in lexicographic order.
  std::vector<std::string> leaf_paths() const;

 private:
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Opaque identifier of an attack state.
struct StateId {
  std::string value;

  friend bool operator==(const StateId&, const StateId&) = default;
  friend auto operator<=>(const StateId&, const StateId&) = default;
};

inline const StateId kStartStateId{"start"};

/// Stable token for (vulnerability, canonical URI): "s" followed by the
/// 64-bit FNV-1a hash of "<normalized name>@<canonical>" in hex.
StateId make_state_id(std::string_view vulnerability_name, std::string_view canonical_uri);

/// Key under which two findings or states are considered the same row.
std::string state_key(std::string_view vulnerability_name, std::string_view canonical_uri);

struct AttackState {
  StateId id;
  std::string vulnerability_name;
  NormalizedUri uri;
  std::vector<PreconditionRef> preconditions;
  std::vector<PostconditionRef> postconditions;
  bool is_goal = false;
  bool is_start = false;
  std::string source;
  std::string label;

  /// Label when the input gave one, otherwise the id.
  const std::string& display_name() const { return label.empty() ? id.value : label; }
};

enum class EdgeKind {
  Attach,         // start -> state whose preconditions hold from the start alone
  Grant,          // non-false-positive postcondition of `from` is a precondition of `to`
  FalsePositive,  // false-positive postcondition of `from` is a precondition of `to`
  UserAction,     // assumed precondition of `to`; `from` is empty
};

struct ConditionEdge {
  std::optional<StateId> from;
  StateId to;
  ConditionId condition;  // empty for Attach
  EdgeKind kind;

  friend bool operator==(const ConditionEdge&, const ConditionEdge&) = default;
};

class Fsm;

namespace detail {
struct FsmAccess;
}

/// The attack state machine. Immutable once built; every container iterates
/// in id order, so two machines built from equal inputs compare equal
/// element by element.
class Fsm {
 public:
  using Index = std::map<ConditionId, std::set<StateId>>;

  const std::string& site() const { return site_; }
  /// All states including the start state, sorted by id.
  const std::vector<AttackState>& states() const { return states_; }
  const AttackState& start() const;
  const AttackState* find(const StateId& id) const;
  const AttackState& at(const StateId& id) const;
  std::size_t size() const { return states_.size(); }

  /// Environment facts granted by the start state.
  const std::set<ConditionId>& initial_conditions() const { return initial_conditions_; }
  /// Condition id -> states granting it through non-false-positive postconditions.
  const Index& producers() const { return producers_; }
  /// Condition id -> states requiring it.
  const Index& consumers() const { return consumers_; }
  /// Condition id -> a human-readable label (first one seen in id order).
  const std::map<ConditionId, std::string>& condition_labels() const { return labels_; }
  /// Condition ids used as a user-action precondition anywhere.
  const std::set<ConditionId>& user_action_conditions() const { return user_actions_; }
  /// Build-time notes (unsatisfiable preconditions, near-miss labels, ...).
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

  /// Every edge in deterministic order (Attach, then per state by id).
  const std::vector<ConditionEdge>& edges() const { return edges_; }
  /// Distinct (from, to) pairs over Attach and Grant edges.
  std::set<std::pair<StateId, StateId>> structural_edges() const;
  std::vector<StateId> successors(const StateId& id) const;

  /// Preconditions that are wired to something: a producer, an environment
  /// fact or a user-action assumption.
  std::size_t in_degree(const StateId& id) const;
  /// Non-false-positive postconditions.
  std::size_t out_degree(const StateId& id) const;

  std::vector<StateId> goals() const;
  std::size_t non_start_count() const { return states_.empty() ? 0 : states_.size() - 1; }

  friend bool operator==(const Fsm& a, const Fsm& b);

 private:
  friend struct detail::FsmAccess;

  std::string site_;
  std::vector<AttackState> states_;
  std::set<ConditionId> initial_conditions_;
  Index producers_;
  Index consumers_;
  std::map<ConditionId, std::string> labels_;
  std::set<ConditionId> user_actions_;
  std::vector<std::string> diagnostics_;
  std::vector<ConditionEdge> edges_;
};

/// Victim-user actions the analyst assumes happen.
struct AssumptionSet {
  std::set<ConditionId> granted_user_actions;

  friend bool operator==(const AssumptionSet&, const AssumptionSet&) = default;
};

/// Throws InvalidAssumption unless every member is a user-action precondition of fsm.
void validate_assumptions(const Fsm& fsm, const AssumptionSet& assumptions);

struct ReachResult {
  std::set<StateId> visited;
  std::set<ConditionId> true_conditions;
  /// Condition id -> states that granted it. The start state appears for
  /// environment facts; assumed conditions have no entry unless a state also
  /// produced them.
  std::map<ConditionId, std::set<StateId>> provenance;
  std::vector<StateId> firing_order;
  std::set<ConditionId> assumptions;

  friend bool operator==(const ReachResult&, const ReachResult&) = default;
};

struct AttackStep {
  StateId state;
  std::vector<ConditionId> granted;

  friend bool operator==(const AttackStep&, const AttackStep&) = default;
};

struct AttackPath {
  StateId goal;
  std::vector<AttackStep> steps;
  std::set<ConditionId> assumptions_used;

  friend bool operator==(const AttackPath&, const AttackPath&) = default;
};

}  // namespace vchain
