#include <json.hpp>

#include "vchain/detail/json_schema.hpp"
#include "vchain/fsm_builder.hpp"
#include "vchain/reporting.hpp"

namespace vchain {

using nlohmann::json;

namespace {

std::string_view edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Attach: return "attach";
    case EdgeKind::Grant: return "grant";
    case EdgeKind::FalsePositive: return "false_positive";
    case EdgeKind::UserAction: return "user_action";
  }
  return "grant";
}

json index_to_json(const Fsm::Index& index) {
  json out = json::object();
  for (const auto& [condition, states] : index) {
    json ids = json::array();
    for (const auto& s : states) ids.push_back(s.value);
    out[condition] = std::move(ids);
  }
  return out;
}

Condition condition_checked(const json& j, const std::string& path) {
  detail::expect_keys(j, path, {"id", "condition", "requires_user_action", "false_positive"});
  auto c = normalize_condition(detail::get_string(j, path, "condition"));
  if (j.contains("id") && detail::get_string(j, path, "id") != c.id) {
    detail::schema_error(path + ".id", "does not match the normalized condition");
  }
  return c;
}

}  // namespace

json fsm_to_json(const Fsm& fsm) {
  json root = json::object();
  root["format_version"] = kFsmFormatVersion;
  root["site"] = fsm.site();

  json facts = json::array();
  for (const auto& post : fsm.start().postconditions) facts.push_back(post.condition.label);
  root["environment_facts"] = std::move(facts);
  root["start"] = fsm.start().id.value;

  json states = json::array();
  for (const auto& s : fsm.states()) {
    if (s.is_start) continue;
    json j = json::object();
    j["id"] = s.id.value;
    if (!s.label.empty()) j["label"] = s.label;
    j["vulnerability"] = s.vulnerability_name;
    j["uri"] = s.uri.raw;
    j["canonical_uri"] = s.uri.canonical;
    json pres = json::array();
    for (const auto& p : s.preconditions) {
      pres.push_back({{"id", p.condition.id},
                      {"condition", p.condition.label},
                      {"requires_user_action", p.requires_user_action}});
    }
    json posts = json::array();
    for (const auto& p : s.postconditions) {
      posts.push_back(
          {{"id", p.condition.id}, {"condition", p.condition.label}, {"false_positive", p.false_positive}});
    }
    j["preconditions"] = std::move(pres);
    j["postconditions"] = std::move(posts);
    j["is_goal"] = s.is_goal;
    if (!s.source.empty()) j["source"] = s.source;
    states.push_back(std::move(j));
  }
  root["states"] = std::move(states);

  json initial = json::array();
  for (const auto& c : fsm.initial_conditions()) initial.push_back(c);
  root["initial_conditions"] = std::move(initial);
  root["producers"] = index_to_json(fsm.producers());
  root["consumers"] = index_to_json(fsm.consumers());

  json edges = json::array();
  for (const auto& e : fsm.edges()) {
    json j = json::object();
    j["from"] = e.from ? json(e.from->value) : json(nullptr);
    j["to"] = e.to.value;
    j["condition"] = e.condition;
    j["kind"] = edge_kind_name(e.kind);
    edges.push_back(std::move(j));
  }
  root["edges"] = std::move(edges);
  root["diagnostics"] = fsm.diagnostics();
  return root;
}

std::string serialize_fsm(const Fsm& fsm) { return fsm_to_json(fsm).dump(2) + "\n"; }

Fsm parse_fsm(std::string_view document) {
  const json root = detail::parse_json(document, "fsm document");
  detail::expect_keys(root, "$",
                      {"format_version", "site", "environment_facts", "start", "states", "initial_conditions",
                       "producers", "consumers", "edges", "diagnostics"});
  const auto version = detail::get_size(root, "$", "format_version");
  if (version != static_cast<std::size_t>(kFsmFormatVersion)) {
    detail::schema_error("$.format_version", "unsupported version " + std::to_string(version));
  }
  const std::string site = detail::get_string(root, "$", "site");

  std::vector<Condition> facts;
  const auto& fact_array = detail::get_array(root, "$", "environment_facts");
  for (std::size_t i = 0; i < fact_array.size(); ++i) {
    facts.push_back(normalize_condition(
        detail::get_string(fact_array[i], "$.environment_facts[" + std::to_string(i) + "]")));
  }

  std::vector<AttackState> states;
  const auto& state_array = detail::get_array(root, "$", "states");
  for (std::size_t i = 0; i < state_array.size(); ++i) {
    const std::string at = "$.states[" + std::to_string(i) + "]";
    const auto& j = state_array[i];
    detail::expect_keys(j, at,
                        {"id", "label", "vulnerability", "uri", "canonical_uri", "preconditions", "postconditions",
                         "is_goal", "source"});
    AttackState s;
    s.vulnerability_name = detail::get_string(j, at, "vulnerability");
    s.uri = normalize_uri(detail::get_string(j, at, "uri"));
    if (j.contains("canonical_uri") && detail::get_string(j, at, "canonical_uri") != s.uri.canonical) {
      detail::schema_error(at + ".canonical_uri", "does not match the normalized uri");
    }
    s.id = make_state_id(s.vulnerability_name, s.uri.canonical);
    if (detail::get_string(j, at, "id") != s.id.value) {
      detail::schema_error(at + ".id", "does not match the (vulnerability, uri) pair");
    }
    const auto& pres = detail::get_array(j, at, "preconditions");
    for (std::size_t k = 0; k < pres.size(); ++k) {
      const std::string p = at + ".preconditions[" + std::to_string(k) + "]";
      s.preconditions.push_back({condition_checked(pres[k], p), detail::get_bool(pres[k], p, "requires_user_action")});
    }
    const auto& posts = detail::get_array(j, at, "postconditions");
    for (std::size_t k = 0; k < posts.size(); ++k) {
      const std::string p = at + ".postconditions[" + std::to_string(k) + "]";
      if (posts[k].contains("requires_user_action")) {
        throw Error(ErrorCode::UnknownAssumptionFlag, p + ": requires_user_action on a postcondition");
      }
      s.postconditions.push_back({condition_checked(posts[k], p), detail::get_bool(posts[k], p, "false_positive")});
    }
    s.is_goal = detail::get_bool(j, at, "is_goal");
    if (j.contains("source")) s.source = detail::get_string(j, at, "source");
    if (j.contains("label")) s.label = detail::get_string(j, at, "label");
    Finding as_finding{s.vulnerability_name, s.uri, s.preconditions, s.postconditions, s.is_goal, s.source, s.label};
    validate_finding(as_finding, at);
    states.push_back(std::move(s));
  }

  std::set<StateId> ids;
  for (const auto& s : states) {
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::DuplicateState, "state " + s.id.value + " appears twice in the fsm document");
    }
  }

  Fsm fsm = attach_start_state(std::move(states), facts, site);
  const json fresh = fsm_to_json(fsm);
  for (const char* key : {"start", "initial_conditions", "producers", "consumers", "edges", "diagnostics"}) {
    if (root.contains(key) && root.at(key) != fresh.at(key)) {
      detail::schema_error(std::string("$.") + key, "stored value disagrees with the states");
    }
  }
  return fsm;
}

}  // namespace vchain
