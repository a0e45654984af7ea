#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "coevo/core.hpp"

namespace coevo {

inline constexpr std::size_t kNoSource = std::numeric_limits<std::size_t>::max();

/// Describes how a machine's input space changes: new cardinalities plus,
/// for every new external component and inbox slot, which old one it comes
/// from (kNoSource for a fresh one).
struct RuleReshape {
  Symbol old_state_card = 1;
  Symbol new_state_card = 1;
  Symbol old_msg_card = 1;
  Symbol new_msg_card = 1;
  std::vector<Symbol> old_external_cards;
  std::vector<Symbol> new_external_cards;
  std::vector<std::size_t> external_map;
  std::size_t old_arity = 0;
  std::vector<std::size_t> parent_map;
};

/// Rebuilds a rule over a reshaped input space.
///  - Table/kernel: new state symbols get identity rows (x' = x, m = 0); other
///    keys read the old row at (x, e mod old card, inbox mod old |M|), with
///    fresh inputs read as 0; outputs are reduced mod the new sizes.
///  - Linear ring: coefficients follow their inputs, fresh inputs get 0, and
///    arithmetic is reinterpreted modulo the new cardinalities.
UpdateRule reshape_rule(const UpdateRule& rule, const RuleReshape& reshape);

/// Identity external/parent maps for a machine that keeps its wiring.
RuleReshape same_wiring(const AgentSpec& agent, std::size_t arity, Symbol state_card);

}  // namespace coevo
