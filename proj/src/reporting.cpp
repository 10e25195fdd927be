#include "vchain/reporting.hpp"

#include <sstream>
#include <stdexcept>

#include "vchain/detail/json_schema.hpp"

namespace vchain {

using nlohmann::json;

namespace {

template <class Range>
json id_array(const Range& ids) {
  json out = json::array();
  for (const auto& id : ids) {
    if constexpr (std::is_same_v<std::decay_t<decltype(id)>, StateId>) {
      out.push_back(id.value);
    } else {
      out.push_back(id);
    }
  }
  return out;
}

std::vector<std::string> strings_at(const json& obj, const std::string& path, const char* key) {
  std::vector<std::string> out;
  const auto& arr = detail::get_array(obj, path, key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(detail::get_string(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::set<StateId> state_set_at(const json& obj, const std::string& path, const char* key) {
  std::set<StateId> out;
  for (auto& s : strings_at(obj, path, key)) out.insert(StateId{std::move(s)});
  return out;
}

std::set<ConditionId> condition_set_at(const json& obj, const std::string& path, const char* key) {
  auto v = strings_at(obj, path, key);
  return {v.begin(), v.end()};
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::set<ConditionId> blocking_conditions(const Fsm& fsm, const ReachResult& result,
                                         const std::set<ConditionId>& missing) {
  std::set<ConditionId> out;
  std::set<ConditionId> seen;
  std::vector<ConditionId> pending(missing.begin(), missing.end());
  while (!pending.empty()) {
    const auto c = pending.back();
    pending.pop_back();
    if (!seen.insert(c).second) continue;
    const auto it = fsm.producers().find(c);
    if (it == fsm.producers().end() || it->second.empty()) {
      out.insert(c);
      continue;
    }
    for (const auto& producer : it->second) {
      for (const auto& pre : fsm.at(producer).preconditions) {
        if (!result.true_conditions.contains(pre.condition.id)) pending.push_back(pre.condition.id);
      }
    }
  }
  return out;
}

}  // namespace

AnalysisReport to_report(const Fsm& fsm, const ReachResult& result, const std::vector<AttackPath>& witnesses,
                         Semantics semantics) {
  AnalysisReport report;
  report.site = fsm.site();
  report.summary = {fsm.non_start_count(), fsm.structural_edges().size(), fsm.goals().size()};
  report.semantics = semantics;
  report.reach = result;
  report.reachable_goals = collect_goals(result, fsm);
  for (const auto& goal : fsm.goals()) {
    if (result.visited.contains(goal)) continue;
    UnreachableGoal entry{goal, {}, {}};
    for (const auto& pre : fsm.at(goal).preconditions) {
      if (!result.true_conditions.contains(pre.condition.id)) entry.missing.insert(pre.condition.id);
    }
    entry.blocking = blocking_conditions(fsm, result, entry.missing);
    report.unreachable_goals.push_back(std::move(entry));
  }
  ReachParams params;
  params.semantics = semantics;
  params.assumptions.granted_user_actions = result.assumptions;
  report.chaining = diff_isolated_vs_chained(fsm, params);
  report.witnesses = witnesses;
  for (const auto& s : fsm.states()) report.state_labels.emplace(s.id.value, s.display_name());
  return report;
}

AnalysisReport analyze(const Fsm& fsm, const ReachParams& params) {
  const auto result = reach(fsm, params);
  std::vector<AttackPath> witnesses;
  for (const auto& goal : collect_goals(result, fsm)) {
    auto path = extract_witness(fsm, result, goal);
    if (auto problem = check_witness(fsm, path)) {
      throw std::logic_error("witness for " + fsm.at(goal).display_name() + " does not replay: " + *problem);
    }
    witnesses.push_back(std::move(path));
  }
  return to_report(fsm, result, witnesses, params.semantics);
}

json report_to_json(const AnalysisReport& report) {
  json root = json::object();
  root["format_version"] = kReportFormatVersion;
  root["site"] = report.site;
  root["summary"] = {{"states", report.summary.states},
                     {"edges", report.summary.edges},
                     {"goals", report.summary.goals}};
  root["semantics"] = to_string(report.semantics);
  root["assumptions"] = id_array(report.reach.assumptions);
  root["reachable_states"] = id_array(report.reach.visited);
  root["true_conditions"] = id_array(report.reach.true_conditions);
  root["firing_order"] = id_array(report.reach.firing_order);
  json provenance = json::object();
  for (const auto& [c, states] : report.reach.provenance) provenance[c] = id_array(states);
  root["provenance"] = std::move(provenance);
  root["reachable_goals"] = id_array(report.reachable_goals);
  json unreachable = json::array();
  for (const auto& u : report.unreachable_goals) {
    unreachable.push_back(
        {{"state", u.state.value}, {"missing", id_array(u.missing)}, {"blocking", id_array(u.blocking)}});
  }
  root["unreachable_goals"] = std::move(unreachable);
  root["chaining"] = {{"chained", id_array(report.chaining.chained)},
                      {"isolated", id_array(report.chaining.isolated)},
                      {"difference", id_array(report.chaining.difference)}};
  json witnesses = json::array();
  for (const auto& w : report.witnesses) {
    json steps = json::array();
    for (const auto& step : w.steps) steps.push_back({{"state", step.state.value}, {"granted", step.granted}});
    witnesses.push_back(
        {{"goal", w.goal.value}, {"assumptions_used", id_array(w.assumptions_used)}, {"steps", std::move(steps)}});
  }
  root["witnesses"] = std::move(witnesses);
  root["state_labels"] = report.state_labels;
  return root;
}

std::string serialize_report(const AnalysisReport& report) { return report_to_json(report).dump(2) + "\n"; }

AnalysisReport parse_report(std::string_view document) {
  const json root = detail::parse_json(document, "report document");
  const std::string at = "$";
  detail::expect_keys(root, at,
                      {"format_version", "site", "summary", "semantics", "assumptions", "reachable_states",
                       "true_conditions", "firing_order", "provenance", "reachable_goals", "unreachable_goals",
                       "chaining", "witnesses", "state_labels"});
  if (detail::get_size(root, at, "format_version") != static_cast<std::size_t>(kReportFormatVersion)) {
    detail::schema_error("$.format_version", "unsupported version");
  }
  AnalysisReport report;
  report.site = detail::get_string(root, at, "site");

  const auto& summary = detail::get_object(root, at, "summary");
  detail::expect_keys(summary, "$.summary", {"states", "edges", "goals"});
  report.summary = {detail::get_size(summary, "$.summary", "states"), detail::get_size(summary, "$.summary", "edges"),
                    detail::get_size(summary, "$.summary", "goals")};

  const auto semantics = parse_semantics(detail::get_string(root, at, "semantics"));
  if (!semantics) detail::schema_error("$.semantics", "unknown semantics");
  report.semantics = *semantics;

  report.reach.assumptions = condition_set_at(root, at, "assumptions");
  report.reach.visited = state_set_at(root, at, "reachable_states");
  report.reach.true_conditions = condition_set_at(root, at, "true_conditions");
  for (auto& s : strings_at(root, at, "firing_order")) report.reach.firing_order.push_back(StateId{std::move(s)});
  const auto& provenance = detail::get_object(root, at, "provenance");
  for (const auto& [c, states] : provenance.items()) {
    report.reach.provenance[c] = state_set_at(provenance, "$.provenance", c.c_str());
  }
  report.reachable_goals = state_set_at(root, at, "reachable_goals");

  const auto& unreachable = detail::get_array(root, at, "unreachable_goals");
  for (std::size_t i = 0; i < unreachable.size(); ++i) {
    const std::string p = "$.unreachable_goals[" + std::to_string(i) + "]";
    detail::expect_keys(unreachable[i], p, {"state", "missing", "blocking"});
    report.unreachable_goals.push_back({StateId{detail::get_string(unreachable[i], p, "state")},
                                        condition_set_at(unreachable[i], p, "missing"),
                                        condition_set_at(unreachable[i], p, "blocking")});
  }

  const auto& chaining = detail::get_object(root, at, "chaining");
  detail::expect_keys(chaining, "$.chaining", {"chained", "isolated", "difference"});
  report.chaining = {state_set_at(chaining, "$.chaining", "chained"), state_set_at(chaining, "$.chaining", "isolated"),
                     state_set_at(chaining, "$.chaining", "difference")};

  const auto& witnesses = detail::get_array(root, at, "witnesses");
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const std::string p = "$.witnesses[" + std::to_string(i) + "]";
    const auto& w = witnesses[i];
    detail::expect_keys(w, p, {"goal", "assumptions_used", "steps"});
    AttackPath path;
    path.goal = StateId{detail::get_string(w, p, "goal")};
    path.assumptions_used = condition_set_at(w, p, "assumptions_used");
    const auto& steps = detail::get_array(w, p, "steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const std::string sp = p + ".steps[" + std::to_string(k) + "]";
      detail::expect_keys(steps[k], sp, {"state", "granted"});
      path.steps.push_back({StateId{detail::get_string(steps[k], sp, "state")}, strings_at(steps[k], sp, "granted")});
    }
    report.witnesses.push_back(std::move(path));
  }

  const auto& labels = detail::get_object(root, at, "state_labels");
  for (const auto& [id, label] : labels.items()) {
    report.state_labels.emplace(id, detail::get_string(label, "$.state_labels." + id));
  }
  return report;
}

std::string goals_line(const AnalysisReport& report) {
  return "goals reached: " + std::to_string(report.reachable_goals.size()) + "/" +
         std::to_string(report.summary.goals);
}

std::string to_dot(const Fsm& fsm, const ReachResult* result) {
  std::ostringstream out;
  out << "digraph " << dot_quote(fsm.site().empty() ? "fsm" : fsm.site()) << " {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=ellipse, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\", fontsize=10];\n";

  for (const auto& s : fsm.states()) {
    std::vector<std::string> attrs;
    std::string label = s.display_name();
    if (!s.is_start) {
      label += "\n" + s.vulnerability_name + "\n" + (s.uri.is_null() ? std::string("NULL") : s.uri.canonical);
    }
    attrs.push_back("label=" + dot_quote(label));
    std::vector<std::string> style;
    if (s.is_start) attrs.push_back("shape=doublecircle");
    if (s.is_goal) {
      style.push_back("filled");
      attrs.push_back("fillcolor=red");
    }
    if (result && result->visited.contains(s.id)) style.push_back("bold");
    if (!style.empty()) {
      std::string joined;
      for (const auto& st : style) joined += (joined.empty() ? "" : ",") + st;
      attrs.push_back("style=" + dot_quote(joined));
    }
    out << "  " << dot_quote(s.id.value) << " [";
    for (std::size_t i = 0; i < attrs.size(); ++i) out << (i ? ", " : "") << attrs[i];
    out << "];\n";
  }

  for (const auto& c : fsm.user_action_conditions()) {
    out << "  " << dot_quote("assume:" + c) << " [shape=point, label=\"\"];\n";
  }

  for (const auto& e : fsm.edges()) {
    switch (e.kind) {
      case EdgeKind::Attach:
        // Only precondition-free states; others already get labeled edges from start.
        if (!fsm.at(e.to).preconditions.empty()) break;
        out << "  " << dot_quote(e.from->value) << " -> " << dot_quote(e.to.value) << ";\n";
        break;
      case EdgeKind::Grant:
        out << "  " << dot_quote(e.from->value) << " -> " << dot_quote(e.to.value)
            << " [label=" << dot_quote(e.condition) << "];\n";
        break;
      case EdgeKind::FalsePositive:
        out << "  " << dot_quote(e.from->value) << " -> " << dot_quote(e.to.value)
            << " [label=" << dot_quote(e.condition) << ", style=dashed, color=red];\n";
        break;
      case EdgeKind::UserAction:
        out << "  " << dot_quote("assume:" + e.condition) << " -> " << dot_quote(e.to.value)
            << " [label=" << dot_quote(e.condition) << ", style=dashed];\n";
        break;
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace vchain
