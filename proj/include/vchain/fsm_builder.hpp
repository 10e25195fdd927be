#pragma once

// Turns validated findings into the attack state machine.

#include <span>
#include <string>
#include <vector>

#include "vchain/ingestion.hpp"
#include "vchain/model.hpp"

namespace vchain {

/// One state per finding, sorted by id. No start state. Throws DuplicateState
/// if two findings share (vulnerability, canonical URI).
std::vector<AttackState> build_states(const UriVulnerabilityMap& map, std::span<const Condition> facts);

/// Adds the start state, which requires nothing and grants exactly the
/// environment facts, then indexes the machine (see derive_edges).
Fsm attach_start_state(std::vector<AttackState> states, std::span<const Condition> facts,
                       std::string site = {});

/// Recomputes producer/consumer indices, edges, labels and diagnostics from
/// the states alone. Idempotent.
Fsm derive_edges(const Fsm& fsm);

/// build_states + attach_start_state + derive_edges. Map warnings go to
/// `warnings` along with the machine's diagnostics.
Fsm build_fsm(const FindingSet& findings, const UriTree& tree, std::vector<std::string>* warnings = nullptr);

}  // namespace vchain
