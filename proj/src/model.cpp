#include "vchain/model.hpp"

#include <algorithm>
#include <cstdint>
#include <cctype>
#include <cstdio>

#include "vchain/detail/text.hpp"

namespace vchain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCondition: return "EmptyCondition";
    case ErrorCode::MalformedUri: return "MalformedUri";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateState: return "DuplicateState";
    case ErrorCode::UnknownAssumptionFlag: return "UnknownAssumptionFlag";
    case ErrorCode::InvalidAssumption: return "InvalidAssumption";
    case ErrorCode::StateBoundExceeded: return "StateBoundExceeded";
    case ErrorCode::ResultFsmMismatch: return "ResultFsmMismatch";
    case ErrorCode::GoalNotReached: return "GoalNotReached";
  }
  return "Error";
}

// ---------------------------------------------------------------------------
// Conditions

Condition normalize_condition(std::string_view label) {
  std::string id;
  id.reserve(label.size());
  bool pending_space = false;
  for (char c : label) {
    if (detail::is_space(c)) {
      pending_space = !id.empty();
      continue;
    }
    if (pending_space) {
      id.push_back(' ');
      pending_space = false;
    }
    id.push_back(detail::ascii_lower(c));
  }
  if (id.empty()) {
    throw Error(ErrorCode::EmptyCondition, "condition label is empty or whitespace-only");
  }
  return Condition{std::move(id), std::string(label)};
}

std::string strip_punctuation(std::string_view id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    out.push_back(c);
  }
  // Removing punctuation can leave doubled or dangling spaces.
  std::string collapsed;
  for (char c : out) {
    if (c == ' ' && (collapsed.empty() || collapsed.back() == ' ')) continue;
    collapsed.push_back(c);
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

// ---------------------------------------------------------------------------
// URIs

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode_path(std::string_view path, std::string_view raw) {
  std::string out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] != '%') {
      out.push_back(path[i]);
      continue;
    }
    const bool complete = i + 2 < path.size();
    const int hi = complete ? hex_value(path[i + 1]) : -1;
    const int lo = complete ? hex_value(path[i + 2]) : -1;
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::MalformedUri,
                  "invalid percent escape in '" + std::string(raw) + "'");
    }
    const int byte = hi * 16 + lo;
    if (byte == '%' || byte == '?' || byte == '#') {
      // Kept encoded so that normalizing a canonical path is a no-op.
      out.append(path.substr(i, 3));
    } else if (byte == 0) {
      throw Error(ErrorCode::MalformedUri, "percent-decoded NUL in '" + std::string(raw) + "'");
    } else {
      out.push_back(static_cast<char>(byte));
    }
    i += 2;
  }
  if (!detail::is_valid_utf8(out)) {
    throw Error(ErrorCode::MalformedUri, "path does not decode to UTF-8 in '" + std::string(raw) + "'");
  }
  return out;
}

std::string_view strip_scheme_and_authority(std::string_view s) {
  const auto sep = s.find("://");
  if (sep == std::string_view::npos || sep == 0) return s;
  const auto scheme = s.substr(0, sep);
  const bool is_scheme =
      detail::is_alpha(scheme.front()) &&
      std::all_of(scheme.begin(), scheme.end(), [](char c) {
        return detail::is_alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
      });
  if (!is_scheme) return s;
  auto rest = s.substr(sep + 3);
  const auto end = rest.find_first_of("/?");
  if (end == std::string_view::npos) return "/";
  rest = rest.substr(end);
  return rest;
}

}  // namespace

namespace {

std::string join_segments(const std::vector<std::string>& segments) {
  std::string out = "/";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out.push_back('/');
    out += segments[i];
  }
  return out;
}

}  // namespace

std::string NormalizedUri::path() const { return is_sentinel() ? std::string{} : join_segments(segments); }

std::string NormalizedUri::query() const {
  const auto q = canonical.find('?');
  return q == std::string::npos ? std::string{} : canonical.substr(q + 1);
}

NormalizedUri normalize_uri(std::string_view raw) {
  const std::string_view trimmed = detail::trim(raw);
  if (trimmed.empty()) {
    throw Error(ErrorCode::MalformedUri, "URI is empty");
  }
  NormalizedUri uri;
  uri.raw = std::string(raw);

  const std::string upper = detail::ascii_upper(detail::collapse_spaces(trimmed));
  if (upper == "ALL URI" || trimmed == NormalizedUri::kAnyUri) {
    uri.canonical = std::string(NormalizedUri::kAnyUri);
    return uri;
  }
  if (upper == "NULL") {
    return uri;
  }
  if (!detail::is_valid_utf8(trimmed)) {
    throw Error(ErrorCode::MalformedUri, "URI is not valid UTF-8");
  }

  std::string_view rest = strip_scheme_and_authority(trimmed);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    rest = rest.substr(0, hash);
  }
  std::string_view path = rest;
  std::string_view query;
  bool has_query = false;
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    path = rest.substr(0, q);
    query = rest.substr(q + 1);
    has_query = true;
  }
  if (path.empty() && !has_query) {
    throw Error(ErrorCode::MalformedUri, "no path in '" + std::string(raw) + "'");
  }

  const std::string decoded = percent_decode_path(path, raw);
  std::size_t start = 0;
  while (start <= decoded.size()) {
    auto end = decoded.find('/', start);
    if (end == std::string::npos) end = decoded.size();
    if (end > start) uri.segments.push_back(decoded.substr(start, end - start));
    start = end + 1;
  }
  uri.canonical = join_segments(uri.segments);
  if (has_query) {
    uri.canonical.push_back('?');
    uri.canonical.append(query);
  }
  if (detail::is_space(uri.canonical.back())) {
    throw Error(ErrorCode::MalformedUri, "canonical form of '" + std::string(raw) + "' ends in whitespace");
  }
  return uri;
}

// ---------------------------------------------------------------------------
// URI tree

UriTree::UriTree() {
  nodes_.push_back(Node{"", "/", std::nullopt, {}, false});
  index_.emplace("/", 0);
}

bool UriTree::insert(const NormalizedUri& uri) {
  if (uri.is_sentinel()) {
    throw Error(ErrorCode::MalformedUri, "sentinel URI '" + uri.raw + "' cannot be a crawled resource");
  }
  std::size_t current = 0;
  std::string path;
  for (const auto& segment : uri.segments) {
    path += "/" + segment;
    auto it = index_.find(path);
    if (it == index_.end()) {
      const std::size_t next = nodes_.size();
      nodes_.push_back(Node{segment, path, current, {}, false});
      index_.emplace(path, next);
      auto& kids = nodes_[current].children;
      const auto pos = std::lower_bound(kids.begin(), kids.end(), segment,
                                        [this](std::size_t k, const std::string& name) {
                                          return nodes_[k].name < name;
                                        });
      kids.insert(pos, next);
      current = next;
    } else {
      current = it->second;
    }
  }
  if (nodes_[current].is_resource) return false;
  nodes_[current].is_resource = true;
  return true;
}

bool UriTree::contains(const NormalizedUri& uri) const {
  if (uri.is_sentinel()) return false;
  const Node* n = find(uri.path());
  return n != nullptr && n->is_resource;
}

const UriTree::Node* UriTree::find(std::string_view path) const {
  auto it = index_.find(path);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<std::string> UriTree::leaf_paths() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.is_leaf() && n.parent) out.push_back(n.path);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Findings and states

void validate_finding(const Finding& finding, std::string_view where) {
  const std::string at(where);
  if (detail::trim(finding.vulnerability_name).empty()) {
    throw Error(ErrorCode::SchemaViolation, at + ": vulnerability name is empty");
  }
  std::set<ConditionId> seen;
  for (const auto& pre : finding.preconditions) {
    if (!seen.insert(pre.condition.id).second) {
      throw Error(ErrorCode::SchemaViolation,
                  at + ": precondition '" + pre.condition.id + "' listed twice");
    }
  }
  seen.clear();
  for (const auto& post : finding.postconditions) {
    if (!seen.insert(post.condition.id).second) {
      throw Error(ErrorCode::SchemaViolation,
                  at + ": postcondition '" + post.condition.id + "' listed twice");
    }
  }
}

std::string state_key(std::string_view vulnerability_name, std::string_view canonical_uri) {
  std::string key = normalize_condition(vulnerability_name).id;
  key.push_back('@');
  key.append(canonical_uri);
  return key;
}

StateId make_state_id(std::string_view vulnerability_name, std::string_view canonical_uri) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : state_key(vulnerability_name, canonical_uri)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[18];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(hash));
  return StateId{buf};
}

// ---------------------------------------------------------------------------
// Fsm accessors

const AttackState& Fsm::start() const {
  for (const auto& s : states_) {
    if (s.is_start) return s;
  }
  throw Error(ErrorCode::SchemaViolation, "state machine has no start state");
}

const AttackState* Fsm::find(const StateId& id) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), id,
                             [](const AttackState& s, const StateId& key) { return s.id < key; });
  return it != states_.end() && it->id == id ? &*it : nullptr;
}

const AttackState& Fsm::at(const StateId& id) const {
  if (const auto* s = find(id)) return *s;
  throw Error(ErrorCode::ResultFsmMismatch, "unknown state id '" + id.value + "'");
}

std::set<std::pair<StateId, StateId>> Fsm::structural_edges() const {
  std::set<std::pair<StateId, StateId>> out;
  for (const auto& e : edges_) {
    if (e.from && (e.kind == EdgeKind::Attach || e.kind == EdgeKind::Grant)) {
      out.emplace(*e.from, e.to);
    }
  }
  return out;
}

std::vector<StateId> Fsm::successors(const StateId& id) const {
  std::set<StateId> out;
  for (const auto& e : edges_) {
    if (e.from == id && (e.kind == EdgeKind::Attach || e.kind == EdgeKind::Grant)) {
      out.insert(e.to);
    }
  }
  return {out.begin(), out.end()};
}

std::size_t Fsm::in_degree(const StateId& id) const {
  const auto& s = at(id);
  std::size_t n = 0;
  for (const auto& pre : s.preconditions) {
    const auto it = producers_.find(pre.condition.id);
    const bool produced = it != producers_.end() && !it->second.empty();
    if (produced || pre.requires_user_action || initial_conditions_.contains(pre.condition.id)) ++n;
  }
  return n;
}

std::size_t Fsm::out_degree(const StateId& id) const {
  const auto& s = at(id);
  return static_cast<std::size_t>(std::count_if(
      s.postconditions.begin(), s.postconditions.end(),
      [](const PostconditionRef& p) { return !p.false_positive; }));
}

std::vector<StateId> Fsm::goals() const {
  std::vector<StateId> out;
  for (const auto& s : states_) {
    if (s.is_goal) out.push_back(s.id);
  }
  return out;
}

bool operator==(const Fsm& a, const Fsm& b) {
  if (a.site_ != b.site_ || a.states_.size() != b.states_.size()) return false;
  for (std::size_t i = 0; i < a.states_.size(); ++i) {
    const auto& x = a.states_[i];
    const auto& y = b.states_[i];
    if (x.id != y.id || x.vulnerability_name != y.vulnerability_name || !(x.uri == y.uri) ||
        x.preconditions != y.preconditions || x.postconditions != y.postconditions ||
        x.is_goal != y.is_goal || x.is_start != y.is_start || x.label != y.label ||
        x.source != y.source) {
      return false;
    }
  }
  return a.initial_conditions_ == b.initial_conditions_ && a.producers_ == b.producers_ &&
         a.consumers_ == b.consumers_ && a.edges_ == b.edges_;
}

void validate_assumptions(const Fsm& fsm, const AssumptionSet& assumptions) {
  for (const auto& id : assumptions.granted_user_actions) {
    if (!fsm.user_action_conditions().contains(id)) {
      throw Error(ErrorCode::InvalidAssumption,
                  "'" + id + "' is not a user-action precondition of any state");
    }
  }
}

}  // namespace vchain
