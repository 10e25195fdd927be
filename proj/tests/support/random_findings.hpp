#pragma once

// Random finding sets for the property suites.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vchain/ingestion.hpp"

namespace vchain::testing {

struct RandomCase {
  FindingSet findings;
  /// A random subset of the user-action conditions, as condition ids.
  std::set<ConditionId> assumptions;
};

struct RandomLimits {
  int max_states = 10;
  int max_conditions = 15;
  int max_pre = 3;
  int max_post = 3;
  double user_action_p = 0.25;
  double false_positive_p = 0.2;
  double goal_p = 0.3;
  int max_facts = 2;
};

inline RandomCase random_case(std::mt19937& rng, const RandomLimits& limits = {}) {
  std::uniform_int_distribution<int> state_count(0, limits.max_states);
  std::uniform_int_distribution<int> cond_count(1, limits.max_conditions);
  std::bernoulli_distribution user_action(limits.user_action_p);
  std::bernoulli_distribution false_positive(limits.false_positive_p);
  std::bernoulli_distribution goal(limits.goal_p);
  std::bernoulli_distribution coin(0.5);

  const int n = state_count(rng);
  const int k = cond_count(rng);
  std::vector<std::string> pool;
  for (int i = 0; i < k; ++i) pool.push_back("c" + std::to_string(i));

  const auto pick = [&](int max) {
    std::vector<std::string> shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::uniform_int_distribution<int> count(0, std::min<int>(max, k));
    shuffled.resize(static_cast<std::size_t>(count(rng)));
    return shuffled;
  };

  RandomCase out;
  out.findings.site = "random";
  for (const auto& c : pick(limits.max_facts)) out.findings.environment_facts.push_back(normalize_condition(c));

  std::set<ConditionId> user_actions;
  for (int i = 0; i < n; ++i) {
    Finding f;
    f.vulnerability_name = "V" + std::to_string(i);
    f.uri = normalize_uri("/u" + std::to_string(i));
    f.label = "S" + std::to_string(i + 1);
    for (const auto& c : pick(limits.max_pre)) {
      const bool user = user_action(rng);
      f.preconditions.push_back({normalize_condition(c), user});
      if (user) user_actions.insert(c);
    }
    for (const auto& c : pick(limits.max_post)) {
      f.postconditions.push_back({normalize_condition(c), false_positive(rng)});
    }
    f.is_goal = goal(rng);
    out.findings.findings.push_back(std::move(f));
  }
  for (const auto& c : user_actions) {
    if (coin(rng)) out.assumptions.insert(c);
  }
  return out;
}

}  // namespace vchain::testing
