#include "vchain/ingestion.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "vchain/detail/json_schema.hpp"
#include "vchain/detail/text.hpp"

namespace vchain {

using nlohmann::json;

namespace {

using detail::expect_keys;
using detail::get_array;
using detail::get_bool;
using detail::get_string;
using detail::require;
using detail::schema_error;

const char* kind_name(const json& j) { return j.type_name(); }

Condition condition_at(const json& j, const std::string& path) {
  try {
    return normalize_condition(get_string(j, path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyCondition) throw Error(ErrorCode::EmptyCondition, path + ": condition is empty");
    throw;
  }
}

NormalizedUri uri_at(const std::string& raw, const std::string& path) {
  try {
    return normalize_uri(raw);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

Finding parse_finding(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, std::string("expected object, found ") + kind_name(j));
  expect_keys(j, path,
              {"vulnerability", "uri", "preconditions", "postconditions", "is_goal", "source", "label"});
  Finding f;
  f.vulnerability_name = get_string(require(j, path, "vulnerability"), path + ".vulnerability");
  f.uri = uri_at(get_string(require(j, path, "uri"), path + ".uri"), path + ".uri");

  const auto& pres = get_array(j, path, "preconditions", true);
  for (std::size_t i = 0; i < pres.size(); ++i) {
    const std::string at = path + ".preconditions[" + std::to_string(i) + "]";
    const auto& p = pres[i];
    if (!p.is_object()) schema_error(at, std::string("expected object, found ") + kind_name(p));
    expect_keys(p, at, {"condition", "requires_user_action"});
    f.preconditions.push_back(
        {condition_at(require(p, at, "condition"), at + ".condition"), get_bool(p, at, "requires_user_action")});
  }

  const auto& posts = get_array(j, path, "postconditions", true);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const std::string at = path + ".postconditions[" + std::to_string(i) + "]";
    const auto& p = posts[i];
    if (!p.is_object()) schema_error(at, std::string("expected object, found ") + kind_name(p));
    if (p.contains("requires_user_action")) {
      throw Error(ErrorCode::UnknownAssumptionFlag,
                  at + ": requires_user_action is only meaningful on preconditions");
    }
    expect_keys(p, at, {"condition", "false_positive"});
    f.postconditions.push_back(
        {condition_at(require(p, at, "condition"), at + ".condition"), get_bool(p, at, "false_positive")});
  }

  f.is_goal = get_bool(j, path, "is_goal");
  if (j.contains("source")) f.source = get_string(j["source"], path + ".source");
  if (j.contains("label")) f.label = get_string(j["label"], path + ".label");
  validate_finding(f, path);
  return f;
}

}  // namespace

std::size_t UriVulnerabilityMap::finding_count() const {
  std::size_t n = 0;
  for (const auto& [uri, list] : entries) n += list.size();
  return n;
}

UriTree parse_crawl_list(std::string_view document) {
  if (!detail::is_valid_utf8(document)) {
    throw Error(ErrorCode::SchemaViolation, "crawl list is not valid UTF-8");
  }
  UriTree tree;
  const auto lines = detail::split_lines(document);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    try {
      const auto uri = normalize_uri(line);
      tree.insert(uri);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedUri, "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return tree;
}

void validate_finding_set(const FindingSet& set) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < set.findings.size(); ++i) {
    const auto& f = set.findings[i];
    validate_finding(f, "findings[" + std::to_string(i) + "]");
    const auto key = state_key(f.vulnerability_name, f.uri.canonical);
    auto [it, inserted] = seen.emplace(key, i);
    if (!inserted) {
      throw Error(ErrorCode::DuplicateState, "findings[" + std::to_string(i) + "] repeats findings[" +
                                                 std::to_string(it->second) + "] ('" + f.vulnerability_name +
                                                 "' on '" + f.uri.canonical + "')");
    }
  }
}

std::vector<std::string> lint_findings(const FindingSet& set) {
  std::vector<std::string> warnings;
  std::set<ConditionId> available;
  std::map<ConditionId, std::string> all;
  for (const auto& fact : set.environment_facts) {
    available.insert(fact.id);
    all.emplace(fact.id, fact.label);
  }
  for (const auto& f : set.findings) {
    for (const auto& post : f.postconditions) {
      if (!post.false_positive) available.insert(post.condition.id);
      all.emplace(post.condition.id, post.condition.label);
    }
    for (const auto& pre : f.preconditions) all.emplace(pre.condition.id, pre.condition.label);
  }

  std::set<std::string> unsatisfiable;
  for (const auto& f : set.findings) {
    for (const auto& pre : f.preconditions) {
      if (pre.requires_user_action || available.contains(pre.condition.id)) continue;
      unsatisfiable.insert("unsatisfiable precondition '" + pre.condition.id + "' of '" + f.vulnerability_name +
                           "' on '" + f.uri.canonical + "': no producer and no environment fact");
    }
  }
  warnings.insert(warnings.end(), unsatisfiable.begin(), unsatisfiable.end());

  std::map<std::string, std::vector<ConditionId>> by_stripped;
  for (const auto& [id, label] : all) by_stripped[strip_punctuation(id)].push_back(id);
  for (const auto& [stripped, ids] : by_stripped) {
    if (ids.size() < 2) continue;
    std::string msg = "near-miss condition ids differ only by punctuation:";
    for (const auto& id : ids) msg += " '" + id + "'";
    warnings.push_back(std::move(msg));
  }
  return warnings;
}

FindingSet parse_findings(std::string_view document, std::vector<std::string>* warnings) {
  const json root = detail::parse_json(document, "findings document");
  if (!root.is_object()) schema_error("$", std::string("expected object, found ") + kind_name(root));
  expect_keys(root, "$", {"site", "environment_facts", "findings"});

  FindingSet set;
  if (root.contains("site")) set.site = get_string(root["site"], "$.site");
  const auto& facts = get_array(root, "$", "environment_facts", false);
  for (std::size_t i = 0; i < facts.size(); ++i) {
    set.environment_facts.push_back(condition_at(facts[i], "$.environment_facts[" + std::to_string(i) + "]"));
  }
  const auto& findings = get_array(root, "$", "findings", true);
  for (std::size_t i = 0; i < findings.size(); ++i) {
    set.findings.push_back(parse_finding(findings[i], "$.findings[" + std::to_string(i) + "]"));
  }
  validate_finding_set(set);
  if (warnings) {
    auto lint = lint_findings(set);
    warnings->insert(warnings->end(), lint.begin(), lint.end());
  }
  return set;
}

FindingSet parse_findings_tsv(std::string_view document, std::string site, std::vector<std::string>* warnings) {
  if (!detail::is_valid_utf8(document)) {
    throw Error(ErrorCode::SchemaViolation, "findings table is not valid UTF-8");
  }
  FindingSet set;
  set.site = std::move(site);
  const auto lines = detail::split_lines(document);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = lines[n];
    const std::string at = "line " + std::to_string(n + 1);
    if (detail::trim(line).empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    if (n == 0 || set.findings.empty()) {
      if (detail::ascii_upper(detail::trim(cols.front())) == "VULN") continue;
    }
    if (cols.size() != 5) {
      schema_error(at, "expected 5 tab-separated columns, found " + std::to_string(cols.size()));
    }
    Finding f;
    f.vulnerability_name = std::string(detail::trim(cols[0]));
    f.uri = uri_at(std::string(detail::trim(cols[1])), at);
    for (auto item : detail::split(cols[2], ';')) {
      item = detail::trim(item);
      if (item.empty() || item == "-") continue;
      const bool user = item.front() == '!';
      if (user) item.remove_prefix(1);
      if (item.front() == '?') {
        throw Error(ErrorCode::UnknownAssumptionFlag, at + ": '?' marks postconditions, not preconditions");
      }
      f.preconditions.push_back({condition_at(json(std::string(item)), at + " PRE"), user});
    }
    for (auto item : detail::split(cols[3], ';')) {
      item = detail::trim(item);
      if (item.empty() || item == "-") continue;
      if (item.front() == '!') {
        throw Error(ErrorCode::UnknownAssumptionFlag, at + ": '!' marks preconditions, not postconditions");
      }
      const bool fp = item.front() == '?';
      if (fp) item.remove_prefix(1);
      f.postconditions.push_back({condition_at(json(std::string(item)), at + " POST"), fp});
    }
    const auto goal = detail::trim(cols[4]);
    if (goal != "0" && goal != "1") schema_error(at, "GOAL must be 0 or 1");
    f.is_goal = goal == "1";
    validate_finding(f, at);
    set.findings.push_back(std::move(f));
  }
  validate_finding_set(set);
  if (warnings) {
    auto lint = lint_findings(set);
    warnings->insert(warnings->end(), lint.begin(), lint.end());
  }
  return set;
}

std::string serialize_findings(const FindingSet& set) {
  json root = json::object();
  root["site"] = set.site;
  json facts = json::array();
  for (const auto& fact : set.environment_facts) facts.push_back(fact.label);
  root["environment_facts"] = std::move(facts);
  json findings = json::array();
  for (const auto& f : set.findings) {
    json j = json::object();
    j["vulnerability"] = f.vulnerability_name;
    j["uri"] = f.uri.raw;
    json pres = json::array();
    for (const auto& p : f.preconditions) {
      pres.push_back({{"condition", p.condition.label}, {"requires_user_action", p.requires_user_action}});
    }
    json posts = json::array();
    for (const auto& p : f.postconditions) {
      posts.push_back({{"condition", p.condition.label}, {"false_positive", p.false_positive}});
    }
    j["preconditions"] = std::move(pres);
    j["postconditions"] = std::move(posts);
    j["is_goal"] = f.is_goal;
    if (!f.source.empty()) j["source"] = f.source;
    if (!f.label.empty()) j["label"] = f.label;
    findings.push_back(std::move(j));
  }
  root["findings"] = std::move(findings);
  return root.dump(2) + "\n";
}

UriVulnerabilityMap map_findings_to_uris(const FindingSet& findings, const UriTree& tree,
                                         std::vector<std::string>* warnings) {
  UriVulnerabilityMap map;
  std::set<std::string> notes;
  for (const auto& f : findings.findings) {
    map.entries[f.uri.canonical].push_back(f);
    if (!f.uri.is_any() && !tree.contains(f.uri)) {
      notes.insert("finding '" + f.vulnerability_name + "' targets '" + f.uri.canonical +
                   "', which is absent from the crawl tree");
    }
  }
  if (warnings) warnings->insert(warnings->end(), notes.begin(), notes.end());
  return map;
}

}  // namespace vchain
