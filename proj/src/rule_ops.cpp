#include "coevo/rule_ops.hpp"

#include <algorithm>
#include <map>

namespace coevo {

namespace {

RuleDomain reshape_domain(const RuleDomain& old, const RuleReshape& rs) {
  RuleDomain d;
  d.state_card = rs.new_state_card;
  d.msg_card = rs.new_msg_card;
  d.arity = rs.parent_map.size();
  for (std::size_t i = 0; i < old.taps.size(); ++i) {
    for (std::size_t j = 0; j < rs.external_map.size(); ++j) {
      if (rs.external_map[j] == old.taps[i]) {
        d.taps.push_back(j);
        d.tap_cards.push_back(rs.new_external_cards[j]);
        break;
      }
    }
  }
  return d;
}

// Index into the old domain for a key of the new domain, or kNoSource when the
// key's state symbol did not exist before.
std::size_t old_index(const RuleDomain& old, const RuleDomain& fresh, const RuleDomain::Key& key,
                      const RuleReshape& rs) {
  if (key.x >= old.state_card) return kNoSource;
  std::size_t idx = static_cast<std::size_t>(key.x);
  std::size_t radix = static_cast<std::size_t>(old.state_card);
  for (std::size_t i = 0; i < old.taps.size(); ++i) {
    Symbol v = 0;
    for (std::size_t j = 0; j < fresh.taps.size(); ++j)
      if (rs.external_map[fresh.taps[j]] == old.taps[i]) v = mod(key.tap_values[j], old.tap_cards[i]);
    idx += static_cast<std::size_t>(v) * radix;
    radix *= static_cast<std::size_t>(old.tap_cards[i]);
  }
  std::vector<Symbol> inbox(old.arity, 0);
  for (std::size_t k = 0; k < rs.parent_map.size(); ++k)
    if (rs.parent_map[k] != kNoSource && rs.parent_map[k] < old.arity)
      inbox[rs.parent_map[k]] = mod(key.inbox[k], old.msg_card);
  for (Symbol m : inbox) {
    idx += static_cast<std::size_t>(m) * radix;
    radix *= static_cast<std::size_t>(old.msg_card);
  }
  return idx;
}

MachineOutput reduce(const MachineOutput& o, const RuleReshape& rs) {
  return {mod(o.state, rs.new_state_card), mod(o.message, rs.new_msg_card)};
}

AffineMap reshape_affine(const AffineMap& am, const RuleReshape& rs) {
  AffineMap out;
  out.a = am.a;
  out.d = am.d;
  out.b.assign(rs.external_map.size(), 0);
  for (std::size_t j = 0; j < rs.external_map.size(); ++j)
    if (rs.external_map[j] != kNoSource && rs.external_map[j] < am.b.size()) out.b[j] = am.b[rs.external_map[j]];
  out.c.assign(rs.parent_map.size(), 0);
  for (std::size_t k = 0; k < rs.parent_map.size(); ++k)
    if (rs.parent_map[k] != kNoSource && rs.parent_map[k] < am.c.size()) out.c[k] = am.c[rs.parent_map[k]];
  return out;
}

}  // namespace

UpdateRule reshape_rule(const UpdateRule& rule, const RuleReshape& rs) {
  if (const auto* lr = std::get_if<LinearRingRule>(&rule))
    return LinearRingRule{reshape_affine(lr->state, rs), reshape_affine(lr->message, rs)};

  if (const auto* t = std::get_if<TableRule>(&rule)) {
    TableRule out;
    out.domain = reshape_domain(t->domain, rs);
    out.rows.resize(out.domain.size());
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      const RuleDomain::Key key = out.domain.decode(i);
      const std::size_t src = old_index(t->domain, out.domain, key, rs);
      if (src == kNoSource) {
        out.rows[i] = MachineOutput{key.x, 0};
      } else if (src < t->rows.size() && t->rows[src]) {
        out.rows[i] = reduce(*t->rows[src], rs);
      }
    }
    return out;
  }

  const auto& k = std::get<KernelRule>(rule);
  KernelRule out;
  out.domain = reshape_domain(k.domain, rs);
  out.rows.resize(out.domain.size());
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const RuleDomain::Key key = out.domain.decode(i);
    const std::size_t src = old_index(k.domain, out.domain, key, rs);
    if (src == kNoSource) {
      out.rows[i] = {{1.0, {key.x, 0}}};
      continue;
    }
    if (src >= k.rows.size()) continue;
    // Reduction may merge branches; keep them ordered by first appearance.
    std::vector<KernelBranch> merged;
    for (const auto& br : k.rows[src]) {
      const MachineOutput o = reduce(br.out, rs);
      auto it = std::find_if(merged.begin(), merged.end(), [&](const KernelBranch& m) { return m.out == o; });
      if (it == merged.end())
        merged.push_back({br.prob, o});
      else
        it->prob += br.prob;
    }
    out.rows[i] = std::move(merged);
  }
  return out;
}

RuleReshape same_wiring(const AgentSpec& agent, std::size_t arity, Symbol state_card) {
  RuleReshape rs;
  rs.old_state_card = rs.new_state_card = state_card;
  rs.old_msg_card = rs.new_msg_card = agent.msg_card;
  rs.old_external_cards = rs.new_external_cards = agent.external_cards;
  rs.external_map.resize(agent.external_cards.size());
  for (std::size_t j = 0; j < rs.external_map.size(); ++j) rs.external_map[j] = j;
  rs.old_arity = arity;
  rs.parent_map.resize(arity);
  for (std::size_t k = 0; k < arity; ++k) rs.parent_map[k] = k;
  return rs;
}

}  // namespace coevo
