#include "vchain/fsm_builder.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace vchain {

namespace detail {

struct FsmAccess {
  static Fsm make(std::string site, std::vector<AttackState> states) {
    Fsm fsm;
    fsm.site_ = std::move(site);
    fsm.states_ = std::move(states);
    std::sort(fsm.states_.begin(), fsm.states_.end(),
              [](const AttackState& a, const AttackState& b) { return a.id < b.id; });
    index(fsm);
    return fsm;
  }

  static void index(Fsm& fsm) {
    fsm.initial_conditions_.clear();
    fsm.producers_.clear();
    fsm.consumers_.clear();
    fsm.labels_.clear();
    fsm.user_actions_.clear();
    fsm.diagnostics_.clear();
    fsm.edges_.clear();

    const AttackState* start = nullptr;
    for (const auto& s : fsm.states_) {
      if (!s.is_start) continue;
      if (start) throw Error(ErrorCode::SchemaViolation, "state machine has more than one start state");
      start = &s;
    }
    if (!start) throw Error(ErrorCode::SchemaViolation, "state machine has no start state");
    for (const auto& post : start->postconditions) fsm.initial_conditions_.insert(post.condition.id);

    for (const auto& s : fsm.states_) {
      for (const auto& pre : s.preconditions) {
        fsm.labels_.emplace(pre.condition.id, pre.condition.label);
        fsm.consumers_[pre.condition.id].insert(s.id);
        fsm.producers_[pre.condition.id];
        if (pre.requires_user_action) fsm.user_actions_.insert(pre.condition.id);
      }
      for (const auto& post : s.postconditions) {
        fsm.labels_.emplace(post.condition.id, post.condition.label);
        fsm.consumers_[post.condition.id];
        auto& producers = fsm.producers_[post.condition.id];
        if (!post.false_positive) producers.insert(s.id);
      }
    }

    for (const auto& s : fsm.states_) {
      if (s.is_start) continue;
      const bool attached = std::all_of(s.preconditions.begin(), s.preconditions.end(), [&](const auto& pre) {
        return fsm.initial_conditions_.contains(pre.condition.id);
      });
      if (attached) fsm.edges_.push_back({start->id, s.id, {}, EdgeKind::Attach});
    }

    std::vector<ConditionEdge> edges;
    for (const auto& v : fsm.states_) {
      for (const auto& pre : v.preconditions) {
        const auto& c = pre.condition.id;
        for (const auto& u : fsm.producers_.at(c)) edges.push_back({u, v.id, c, EdgeKind::Grant});
        if (pre.requires_user_action) edges.push_back({std::nullopt, v.id, c, EdgeKind::UserAction});
        if (fsm.producers_.at(c).empty() && !pre.requires_user_action) {
          fsm.diagnostics_.push_back("unsatisfiable precondition '" + c + "' of state " + v.display_name() +
                                     ": no producer and no environment fact");
        }
      }
    }
    for (const auto& u : fsm.states_) {
      for (const auto& post : u.postconditions) {
        if (!post.false_positive) continue;
        for (const auto& v : fsm.consumers_.at(post.condition.id)) {
          edges.push_back({u.id, v, post.condition.id, EdgeKind::FalsePositive});
        }
      }
    }
    std::sort(edges.begin(), edges.end(), [](const ConditionEdge& a, const ConditionEdge& b) {
      const auto key = [](const ConditionEdge& e) {
        return std::tuple(e.to, e.from.has_value(), e.from.value_or(StateId{}), e.condition, e.kind);
      };
      return key(a) < key(b);
    });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    fsm.edges_.insert(fsm.edges_.end(), edges.begin(), edges.end());

    std::sort(fsm.diagnostics_.begin(), fsm.diagnostics_.end());
    fsm.diagnostics_.erase(std::unique(fsm.diagnostics_.begin(), fsm.diagnostics_.end()), fsm.diagnostics_.end());
  }
};

}  // namespace detail

std::vector<AttackState> build_states(const UriVulnerabilityMap& map, std::span<const Condition>) {
  std::map<StateId, std::string> keys;
  std::vector<AttackState> states;
  for (const auto& [canonical, findings] : map.entries) {
    for (const auto& f : findings) {
      AttackState s;
      s.id = make_state_id(f.vulnerability_name, f.uri.canonical);
      const auto key = state_key(f.vulnerability_name, f.uri.canonical);
      auto [it, inserted] = keys.emplace(s.id, key);
      if (!inserted) {
        throw Error(ErrorCode::DuplicateState,
                    it->second == key ? "'" + f.vulnerability_name + "' on '" + f.uri.canonical + "' appears twice"
                                      : "state id collision between '" + it->second + "' and '" + key + "'");
      }
      s.vulnerability_name = f.vulnerability_name;
      s.uri = f.uri;
      s.preconditions = f.preconditions;
      s.postconditions = f.postconditions;
      s.is_goal = f.is_goal;
      s.source = f.source;
      s.label = f.label;
      states.push_back(std::move(s));
    }
  }
  std::sort(states.begin(), states.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return states;
}

Fsm attach_start_state(std::vector<AttackState> states, std::span<const Condition> facts, std::string site) {
  for (const auto& s : states) {
    if (s.is_start) throw Error(ErrorCode::SchemaViolation, "states already contain a start state");
  }
  AttackState start;
  start.id = kStartStateId;
  start.uri = normalize_uri("/");
  start.is_start = true;
  start.label = "start";
  std::set<ConditionId> seen;
  for (const auto& fact : facts) {
    if (seen.insert(fact.id).second) start.postconditions.push_back({fact, false});
  }
  states.push_back(std::move(start));
  return detail::FsmAccess::make(std::move(site), std::move(states));
}

Fsm derive_edges(const Fsm& fsm) {
  Fsm copy = fsm;
  detail::FsmAccess::index(copy);
  return copy;
}

Fsm build_fsm(const FindingSet& findings, const UriTree& tree, std::vector<std::string>* warnings) {
  validate_finding_set(findings);
  const auto map = map_findings_to_uris(findings, tree, warnings);
  auto fsm = attach_start_state(build_states(map, findings.environment_facts), findings.environment_facts,
                                findings.site);
  if (warnings) warnings->insert(warnings->end(), fsm.diagnostics().begin(), fsm.diagnostics().end());
  return fsm;
}

}  // namespace vchain
