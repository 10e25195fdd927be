#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/fixtures.hpp"
#include "support/random_findings.hpp"
#include "vchain/fsm_builder.hpp"

using namespace vchain;
using vchain::testing::by_label;
using vchain::testing::by_labels;
using vchain::testing::load_findings;
using vchain::testing::load_fsm;

namespace {

std::set<StateId> attached(const Fsm& fsm) {
  std::set<StateId> out;
  for (const auto& e : fsm.edges()) {
    if (e.kind == EdgeKind::Attach) out.insert(e.to);
  }
  return out;
}

bool has_edge(const Fsm& fsm, const StateId& from, const StateId& to, EdgeKind kind) {
  return std::ranges::any_of(fsm.edges(), [&](const ConditionEdge& e) {
    return e.from == from && e.to == to && e.kind == kind;
  });
}

}  // namespace

TEST_CASE("state counts of the three fixtures") {
  CHECK(load_fsm("toy").non_start_count() == 4);
  CHECK(load_fsm("testphp").non_start_count() == 10);
  CHECK(load_fsm("phpmyadmin").non_start_count() == 7);
}

TEST_CASE("states are sorted by id and the start state is present") {
  const auto fsm = load_fsm("testphp");
  CHECK(std::ranges::is_sorted(fsm.states(), {}, &AttackState::id));
  CHECK(fsm.start().id == kStartStateId);
  CHECK(fsm.start().is_start);
  CHECK(fsm.start().preconditions.empty());
  CHECK_FALSE(fsm.start().is_goal);
}

TEST_CASE("start attaches to the precondition-free states") {
  const auto t3 = load_fsm("testphp");
  CHECK(attached(t3) == by_labels(t3, {"S1", "S2", "S3", "S5", "S9"}));
  const auto t4 = load_fsm("phpmyadmin");
  CHECK(attached(t4) == by_labels(t4, {"S1", "S2", "S6"}));
  const auto t2 = load_fsm("toy");
  CHECK(attached(t2) == by_labels(t2, {"S1", "S2"}));
}

TEST_CASE("toy edges") {
  const auto fsm = load_fsm("toy");
  const auto s1 = by_label(fsm, "S1"), s2 = by_label(fsm, "S2"), s3 = by_label(fsm, "S3"), s4 = by_label(fsm, "S4");
  CHECK(has_edge(fsm, s1, s3, EdgeKind::Grant));
  CHECK(has_edge(fsm, s2, s3, EdgeKind::Grant));
  CHECK_FALSE(has_edge(fsm, s1, s4, EdgeKind::Grant));
  CHECK(has_edge(fsm, s1, s4, EdgeKind::FalsePositive));
  CHECK(fsm.structural_edges().size() == 4);
  CHECK(fsm.producers().at("x_2").empty());
  CHECK(fsm.consumers().at("x_2") == std::set<StateId>{s4});
  REQUIRE(fsm.diagnostics().size() == 1);
  CHECK(fsm.diagnostics()[0].find("x_2") != std::string::npos);
}

TEST_CASE("testphp degrees and user-action edges") {
  const auto fsm = load_fsm("testphp");
  const auto s6 = by_label(fsm, "S6");
  CHECK(fsm.in_degree(s6) == 3);
  CHECK(fsm.out_degree(s6) == 1);
  CHECK(fsm.in_degree(by_label(fsm, "S4")) == 3);
  CHECK(fsm.user_action_conditions().size() == 3);
  const auto user_edges =
      std::ranges::count_if(fsm.edges(), [](const ConditionEdge& e) { return e.kind == EdgeKind::UserAction; });
  CHECK(user_edges == 3);
  CHECK(std::ranges::all_of(fsm.edges(), [](const ConditionEdge& e) {
    return (e.kind == EdgeKind::UserAction) == !e.from.has_value();
  }));
  CHECK(fsm.goals().size() == 3);
  const auto succ = fsm.successors(by_label(fsm, "S6"));
  CHECK(std::set<StateId>(succ.begin(), succ.end()) == by_labels(fsm, {"S7", "S8"}));
}

TEST_CASE("environment facts are granted by the start state") {
  auto set = load_findings("toy");
  set.environment_facts.push_back(normalize_condition("x_2"));
  const auto fsm = build_fsm(set, UriTree{});
  CHECK(fsm.initial_conditions() == std::set<ConditionId>{"x_2"});
  CHECK(has_edge(fsm, kStartStateId, by_label(fsm, "S4"), EdgeKind::Grant));
  CHECK(attached(fsm).contains(by_label(fsm, "S4")));
  CHECK(fsm.diagnostics().empty());
}

TEST_CASE("empty findings give a start-only machine") {
  const auto fsm = build_fsm(FindingSet{}, UriTree{});
  CHECK(fsm.size() == 1);
  CHECK(fsm.non_start_count() == 0);
  CHECK(fsm.edges().empty());
  CHECK(fsm.goals().empty());
}

TEST_CASE("build_states rejects duplicates") {
  UriVulnerabilityMap map;
  Finding f;
  f.vulnerability_name = "X";
  f.uri = normalize_uri("/x");
  map.entries["/x"] = {f, f};
  try {
    build_states(map, {});
    FAIL("expected DuplicateState");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateState);
  }
}

TEST_CASE("structural invariants over random machines") {
  std::mt19937 rng(3);
  for (int i = 0; i < 400; ++i) {
    const auto rc = vchain::testing::random_case(rng);
    const auto fsm = build_fsm(rc.findings, UriTree{});
    CAPTURE(i);
    REQUIRE(fsm == build_fsm(rc.findings, UriTree{}));
    CHECK(derive_edges(fsm) == fsm);
    CHECK(fsm.non_start_count() == rc.findings.findings.size());

    for (const auto& e : fsm.edges()) {
      CHECK(e.to != kStartStateId);
      if (!e.from) continue;
      const auto& from = fsm.at(*e.from);
      const auto& to = fsm.at(e.to);
      if (e.kind == EdgeKind::Grant) {
        CHECK(std::ranges::any_of(from.postconditions, [&](const PostconditionRef& p) {
          return p.condition.id == e.condition && !p.false_positive;
        }));
      }
      if (e.kind == EdgeKind::FalsePositive) {
        CHECK(std::ranges::any_of(from.postconditions, [&](const PostconditionRef& p) {
          return p.condition.id == e.condition && p.false_positive;
        }));
      }
      if (e.kind != EdgeKind::Attach) {
        CHECK(std::ranges::any_of(to.preconditions,
                                  [&](const PreconditionRef& p) { return p.condition.id == e.condition; }));
      }
    }
    for (const auto& [cond, producers] : fsm.producers()) {
      for (const auto& p : producers) {
        CHECK(std::ranges::any_of(fsm.at(p).postconditions, [&](const PostconditionRef& post) {
          return post.condition.id == cond && !post.false_positive;
        }));
      }
    }
    CHECK(std::ranges::none_of(fsm.goals(), [](const StateId& g) { return g == kStartStateId; }));
  }
}
