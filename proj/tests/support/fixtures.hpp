#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vchain/fsm_builder.hpp"
#include "vchain/ingestion.hpp"

namespace vchain::testing {

inline std::string fixture_path(const std::string& name) { return std::string(VCHAIN_FIXTURE_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline FindingSet load_findings(const std::string& table) {
  return parse_findings(read_text(fixture_path(table + "_findings.json")));
}

inline UriTree load_crawl(const std::string& table) {
  return parse_crawl_list(read_text(fixture_path(table + "_crawl.txt")));
}

/// "toy", "testphp" or "phpmyadmin".
inline Fsm load_fsm(const std::string& table) { return build_fsm(load_findings(table), load_crawl(table)); }

/// Looks a state up by its fixture label ("S4").
inline StateId by_label(const Fsm& fsm, const std::string& label) {
  for (const auto& s : fsm.states()) {
    if (s.label == label) return s.id;
  }
  throw std::runtime_error("no state labelled " + label);
}

inline std::set<StateId> by_labels(const Fsm& fsm, std::initializer_list<const char*> labels) {
  std::set<StateId> out;
  for (const char* l : labels) out.insert(by_label(fsm, l));
  return out;
}

inline std::set<std::string> labels_of(const Fsm& fsm, const std::set<StateId>& ids) {
  std::set<std::string> out;
  for (const auto& id : ids) out.insert(fsm.at(id).display_name());
  return out;
}

inline AssumptionSet all_user_actions(const Fsm& fsm) { return AssumptionSet{fsm.user_action_conditions()}; }

}  // namespace vchain::testing
