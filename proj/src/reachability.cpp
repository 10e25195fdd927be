#include "vchain/reachability.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <vector>

namespace vchain {

std::string_view to_string(Semantics semantics) {
  return semantics == Semantics::FixedPoint ? "fixed-point" : "paper-dfs";
}

std::optional<Semantics> parse_semantics(std::string_view text) {
  if (text == "fixed-point" || text == "fixed_point") return Semantics::FixedPoint;
  if (text == "paper-dfs" || text == "paper_dfs") return Semantics::PaperDfs;
  return std::nullopt;
}

bool is_enabled(const AttackState& state, const std::set<ConditionId>& true_conditions,
                const std::set<ConditionId>& assumptions) {
  return std::all_of(state.preconditions.begin(), state.preconditions.end(), [&](const PreconditionRef& pre) {
    if (true_conditions.contains(pre.condition.id)) return true;
    return pre.requires_user_action && assumptions.contains(pre.condition.id);
  });
}

namespace {

class Run {
 public:
  Run(const Fsm& fsm, const ReachParams& params) {
    if (params.max_states == 0) throw Error(ErrorCode::SchemaViolation, "max_states must be positive");
    if (fsm.non_start_count() > params.max_states) {
      throw Error(ErrorCode::StateBoundExceeded, std::to_string(fsm.non_start_count()) +
                                                      " states exceed the bound of " +
                                                      std::to_string(params.max_states));
    }
    validate_assumptions(fsm, params.assumptions);

    const auto& start = fsm.start();
    result_.assumptions = params.assumptions.granted_user_actions;
    result_.true_conditions = result_.assumptions;
    result_.visited.insert(start.id);
    result_.firing_order.push_back(start.id);
    grant(start);
  }

  bool visited(const StateId& id) const { return result_.visited.contains(id); }

  bool enabled(const AttackState& s) const { return is_enabled(s, result_.true_conditions, result_.assumptions); }

  /// Marks `s` visited and grants its postconditions; returns the condition
  /// ids that became true.
  std::vector<ConditionId> fire(const AttackState& s) {
    result_.visited.insert(s.id);
    result_.firing_order.push_back(s.id);
    return grant(s);
  }

  ReachResult take() { return std::move(result_); }

 private:
  std::vector<ConditionId> grant(const AttackState& s) {
    std::vector<ConditionId> fresh;
    for (const auto& post : s.postconditions) {
      if (post.false_positive) continue;
      result_.provenance[post.condition.id].insert(s.id);
      if (result_.true_conditions.insert(post.condition.id).second) fresh.push_back(post.condition.id);
    }
    return fresh;
  }

  ReachResult result_;
};

ReachResult fixed_point(const Fsm& fsm, const ReachParams& params) {
  Run run(fsm, params);

  // Horn-style counting: a state becomes ready once its count of
  // unsatisfied preconditions drops to zero. Ready states fire smallest id
  // first so firing_order is reproducible.
  std::map<StateId, std::size_t> missing;
  std::priority_queue<StateId, std::vector<StateId>, std::greater<>> ready;
  std::set<ConditionId> satisfied;
  for (const auto& c : fsm.initial_conditions()) satisfied.insert(c);
  for (const auto& c : params.assumptions.granted_user_actions) satisfied.insert(c);

  for (const auto& s : fsm.states()) {
    if (s.is_start) continue;
    std::size_t n = 0;
    for (const auto& pre : s.preconditions) {
      if (!satisfied.contains(pre.condition.id)) ++n;
    }
    missing[s.id] = n;
    if (n == 0) ready.push(s.id);
  }

  while (!ready.empty()) {
    const StateId id = ready.top();
    ready.pop();
    if (run.visited(id)) continue;
    for (const auto& c : run.fire(fsm.at(id))) {
      if (satisfied.contains(c)) continue;
      satisfied.insert(c);
      for (const auto& consumer : fsm.consumers().at(c)) {
        if (consumer == kStartStateId || run.visited(consumer)) continue;
        if (--missing.at(consumer) == 0) ready.push(consumer);
      }
    }
  }
  return run.take();
}

ReachResult paper_dfs(const Fsm& fsm, const ReachParams& params) {
  Run run(fsm, params);

  std::map<StateId, std::vector<StateId>> successors;
  for (const auto& [from, to] : fsm.structural_edges()) successors[from].push_back(to);

  struct Frame {
    const std::vector<StateId>* next;
    std::size_t pos = 0;
  };
  static const std::vector<StateId> kNone;
  const auto next_of = [&](const StateId& id) -> const std::vector<StateId>* {
    auto it = successors.find(id);
    return it == successors.end() ? &kNone : &it->second;
  };

  // Explicit stack; the recursion depth can reach the number of states.
  std::vector<Frame> stack{{next_of(kStartStateId)}};
  while (!stack.empty()) {
    auto& frame = stack.back();
    if (frame.pos == frame.next->size()) {
      stack.pop_back();
      continue;
    }
    const StateId& candidate = (*frame.next)[frame.pos++];
    const auto& s = fsm.at(candidate);
    if (run.visited(s.id) || !run.enabled(s)) continue;
    run.fire(s);
    stack.push_back({next_of(s.id)});
  }
  return run.take();
}

}  // namespace

ReachResult reach(const Fsm& fsm, const ReachParams& params) {
  return params.semantics == Semantics::FixedPoint ? fixed_point(fsm, params) : paper_dfs(fsm, params);
}

std::set<StateId> collect_goals(const ReachResult& result, const Fsm& fsm) {
  std::set<StateId> goals;
  for (const auto& id : result.visited) {
    if (fsm.at(id).is_goal) goals.insert(id);
  }
  return goals;
}

AttackPath extract_witness(const Fsm& fsm, const ReachResult& result, const StateId& goal) {
  if (!result.visited.contains(goal)) {
    throw Error(ErrorCode::GoalNotReached, "state " + fsm.at(goal).display_name() + " was not reached");
  }
  std::map<StateId, std::size_t> position;
  for (std::size_t i = 0; i < result.firing_order.size(); ++i) position.emplace(result.firing_order[i], i);

  AttackPath path;
  path.goal = goal;
  std::set<StateId> chosen;
  std::vector<StateId> pending{goal};
  chosen.insert(goal);
  while (!pending.empty()) {
    const auto& s = fsm.at(pending.back());
    pending.pop_back();
    for (const auto& pre : s.preconditions) {
      const auto& c = pre.condition.id;
      if (fsm.initial_conditions().contains(c)) continue;
      if (result.assumptions.contains(c)) {
        path.assumptions_used.insert(c);
        continue;
      }
      std::optional<StateId> best;
      if (auto it = result.provenance.find(c); it != result.provenance.end()) {
        for (const auto& producer : it->second) {
          if (producer == kStartStateId) continue;
          const auto pos = position.find(producer);
          if (pos == position.end()) continue;
          if (!best || pos->second < position.at(*best)) best = producer;
        }
      }
      if (!best) {
        throw Error(ErrorCode::ResultFsmMismatch,
                    "no recorded producer for '" + c + "' needed by " + s.display_name());
      }
      if (chosen.insert(*best).second) pending.push_back(*best);
    }
  }

  std::vector<StateId> ordered(chosen.begin(), chosen.end());
  std::sort(ordered.begin(), ordered.end(),
            [&](const StateId& a, const StateId& b) { return position.at(a) < position.at(b); });
  for (const auto& id : ordered) {
    AttackStep step{id, {}};
    for (const auto& post : fsm.at(id).postconditions) {
      if (!post.false_positive) step.granted.push_back(post.condition.id);
    }
    path.steps.push_back(std::move(step));
  }
  return path;
}

std::optional<std::string> check_witness(const Fsm& fsm, const AttackPath& path) {
  std::set<ConditionId> truth = fsm.initial_conditions();
  truth.insert(path.assumptions_used.begin(), path.assumptions_used.end());
  if (path.steps.empty()) return "path has no steps";
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    const auto* s = fsm.find(path.steps[i].state);
    if (!s) return "step " + std::to_string(i) + " names unknown state " + path.steps[i].state.value;
    if (s->is_start) return "step " + std::to_string(i) + " is the start state";
    for (const auto& pre : s->preconditions) {
      if (!truth.contains(pre.condition.id)) {
        return "step " + std::to_string(i) + " (" + s->display_name() + ") needs '" + pre.condition.id +
               "' before it is true";
      }
    }
    for (const auto& post : s->postconditions) {
      if (!post.false_positive) truth.insert(post.condition.id);
    }
  }
  if (path.steps.back().state != path.goal) return "last step is not the goal";
  return std::nullopt;
}

ChainingReport diff_isolated_vs_chained(const Fsm& fsm, const ReachParams& params) {
  ChainingReport report;
  const auto result = reach(fsm, params);
  report.chained = collect_goals(result, fsm);

  std::set<ConditionId> free = fsm.initial_conditions();
  free.insert(params.assumptions.granted_user_actions.begin(), params.assumptions.granted_user_actions.end());
  for (const auto& s : fsm.states()) {
    if (s.is_goal && !s.is_start && is_enabled(s, free, params.assumptions.granted_user_actions)) {
      report.isolated.insert(s.id);
    }
  }
  std::set_difference(report.chained.begin(), report.chained.end(), report.isolated.begin(), report.isolated.end(),
                      std::inserter(report.difference, report.difference.end()));
  return report;
}

}  // namespace vchain
