#include "coevo/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "coevo/channel.hpp"
#include "coevo/rule_ops.hpp"

namespace coevo {

std::string_view param_name(ParamKind k) {
  switch (k) {
    case ParamKind::tau: return "tau";
    case ParamKind::msg_card: return "msg_card";
    case ParamKind::n_machines: return "n_machines";
    case ParamKind::state_card: return "state_card";
    case ParamKind::r_society: return "r_society";
    case ParamKind::r_environment: return "r_environment";
    case ParamKind::fan_out: return "fan_out";
  }
  return "?";
}

std::optional<ParamKind> param_from_name(std::string_view name) {
  for (ParamKind k : kAllParams)
    if (param_name(k) == name) return k;
  return std::nullopt;
}

bool is_discrete(ParamKind k) { return k != ParamKind::r_society && k != ParamKind::r_environment; }

std::string_view family_name(CostFunction::Family f) {
  switch (f) {
    case CostFunction::Family::identity: return "identity";
    case CostFunction::Family::power: return "power";
    case CostFunction::Family::logit: return "logit";
  }
  return "?";
}

double CostFunction::cost(double value) const {
  const double z = std::max(0.0, value);
  switch (family) {
    case Family::identity: return z;
    case Family::power: return std::pow(z, exponent);
    case Family::logit: return ceiling * std::tanh(z / (2.0 * scale));
  }
  return z;
}

CostInverse CostFunction::invert(double energy) const {
  const double e = std::max(0.0, energy);
  switch (family) {
    case Family::identity: return {e, e, false};
    case Family::power: return {std::pow(e, 1.0 / exponent), e, false};
    case Family::logit: {
      const double cap = ceiling * (1.0 - 1e-9);
      if (e >= cap) return {2.0 * scale * std::atanh(cap / ceiling), cap, true};
      return {2.0 * scale * std::atanh(e / ceiling), e, false};
    }
  }
  return {e, e, false};
}

AllocationDistribution AllocationDistribution::uniform() {
  AllocationDistribution a;
  a.rho.fill(1.0 / static_cast<double>(kParamCount));
  return a;
}

AllocationDistribution AllocationDistribution::concentrated(ParamKind k) {
  AllocationDistribution a;
  a.rho[slot(k)] = 1.0;
  return a;
}

bool AllocationDistribution::valid() const {
  double s = 0.0;
  for (double v : rho) {
    if (!(v >= 0.0)) return false;
    s += v;
  }
  return std::abs(s - 1.0) <= 1e-12;
}

double ComputationParams::get(ParamKind k) const {
  switch (k) {
    case ParamKind::tau: return static_cast<double>(tau);
    case ParamKind::msg_card: return static_cast<double>(msg_card);
    case ParamKind::n_machines: return static_cast<double>(n_machines);
    case ParamKind::state_card: return static_cast<double>(state_card);
    case ParamKind::r_society: return r_society;
    case ParamKind::r_environment: return r_environment;
    case ParamKind::fan_out: return static_cast<double>(fan_out);
  }
  return 0.0;
}

void ComputationParams::set(ParamKind k, double v) {
  const auto n = static_cast<std::size_t>(std::max(0.0, v));
  switch (k) {
    case ParamKind::tau: tau = n; break;
    case ParamKind::msg_card: msg_card = n; break;
    case ParamKind::n_machines: n_machines = n; break;
    case ParamKind::state_card: state_card = n; break;
    case ParamKind::r_society: r_society = v; break;
    case ParamKind::r_environment: r_environment = v; break;
    case ParamKind::fan_out: fan_out = n; break;
  }
}

AllocationDistribution allocation_from_logits(std::span<const double> logits) {
  if (logits.size() != kParamCount) throw ContractViolation("allocation needs one logit per parameter");
  const double hi = *std::max_element(logits.begin(), logits.end());
  AllocationDistribution a;
  double sum = 0.0;
  for (std::size_t i = 0; i < kParamCount; ++i) sum += a.rho[i] = std::exp(logits[i] - hi);
  for (double& v : a.rho) v /= sum;
  const auto big = static_cast<std::size_t>(std::max_element(a.rho.begin(), a.rho.end()) - a.rho.begin());
  double rest = 0.0;
  for (std::size_t i = 0; i < kParamCount; ++i)
    if (i != big) rest += a.rho[i];
  a.rho[big] = 1.0 - rest;
  return a;
}

PerParam<ParamBounds> EvolutionPolicy::default_bounds() {
  PerParam<ParamBounds> b;
  b[slot(ParamKind::tau)] = {1, 64};
  b[slot(ParamKind::msg_card)] = {1, 64};
  b[slot(ParamKind::n_machines)] = {1, 32};
  b[slot(ParamKind::state_card)] = {1, 8};
  b[slot(ParamKind::r_society)] = {1, 1e9};
  b[slot(ParamKind::r_environment)] = {1, 1e9};
  b[slot(ParamKind::fan_out)] = {1, 32};
  return b;
}

EvolutionOutcome evolve_parameters(const ComputationParams& current, double gfer_effective,
                                   const EvolutionPolicy& policy) {
  EvolutionOutcome out;
  out.params = current;
  const double budget = policy.kappa * std::max(0.0, gfer_effective);
  double final_cost = 0.0;
  for (ParamKind k : kAllParams) {
    const std::size_t i = slot(k);
    const CostFunction& c = policy.costs[i];
    out.allocated[i] = policy.allocation.rho[i] * budget;
    const CostInverse inv = c.invert(out.allocated[i]);
    out.raw[i] = inv.value;
    out.spent[i] = inv.spent;
    out.clamp_discard += out.allocated[i] - inv.spent;
    out.clamped = out.clamped || inv.clamped;

    const ParamBounds& b = policy.bounds[i];
    double v = inv.value;
    if (is_discrete(k)) {
      v = std::floor(v + 1e-9);
      v = std::clamp(v, std::max(1.0, b.floor), std::max(1.0, b.ceiling));
    } else {
      v = std::clamp(v, std::max(1.0, b.floor), std::min(b.ceiling, policy.r_max));
    }
    out.params.set(k, v);
    final_cost += c.cost(v);
  }
  out.rounding_loss = budget - final_cost;
  return out;
}

ComputationParams extract_params(const AgentSpec& society, const AgentSpec& environment, double r_max) {
  ComputationParams p;
  p.tau = society.tau;
  p.msg_card = static_cast<std::size_t>(society.msg_card);
  p.n_machines = society.n();
  p.state_card = 1;
  for (const auto& m : society.machines)
    if (m.role == MachineRole::generic) p.state_card = std::max(p.state_card, static_cast<std::size_t>(m.cardinality));
  p.r_society = precision_from_sigma(society.sigma, r_max);
  p.r_environment = precision_from_sigma(environment.sigma, r_max);
  p.fan_out = society.graph.fan_out_cap;
  return p;
}

LinearRingRule random_ring_rule(Symbol state_card, Symbol msg_card, std::size_t n_external, std::size_t arity,
                                Rng& rng) {
  auto draw = [&](Symbol n) { return static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(n))); };
  auto affine = [&](Symbol n) {
    AffineMap am;
    am.a = draw(n);
    am.b.resize(n_external);
    for (auto& v : am.b) v = draw(n);
    am.c.resize(arity);
    for (auto& v : am.c) v = draw(n);
    am.d = draw(n);
    return am;
  };
  LinearRingRule r;
  r.state = affine(state_card);
  r.message = affine(msg_card);
  return r;
}

namespace {

// Rebuilds `old` on a new graph. node_map[v_new] = v_old or kNoSource; fresh
// machines are copied from `fresh` (their rules must already fit the new graph).
AgentSpec rewire(const AgentSpec& old, const MessageGraph& graph, const std::vector<std::size_t>& node_map,
                 const std::vector<MachineSpec>& fresh) {
  const Topology t_old = topology(old.graph);
  const Topology t_new = topology(graph);
  AgentSpec out = old;
  out.graph = graph;
  out.machines.clear();
  std::size_t next_fresh = 0;
  for (std::size_t v = 0; v < node_map.size(); ++v) {
    if (node_map[v] == kNoSource) {
      out.machines.push_back(fresh.at(next_fresh++));
      continue;
    }
    const std::size_t vo = node_map[v];
    MachineSpec m = old.machines[vo];
    RuleReshape rs = same_wiring(old, t_old.parents[vo].size(), m.cardinality);
    rs.parent_map.clear();
    for (std::size_t p_new : t_new.parents[v]) {
      const std::size_t p_old = node_map[p_new];
      const auto& op = t_old.parents[vo];
      const auto it = std::find(op.begin(), op.end(), p_old);
      rs.parent_map.push_back(p_old == kNoSource || it == op.end() ? kNoSource
                                                                     : static_cast<std::size_t>(it - op.begin()));
    }
    m.rule = reshape_rule(m.rule, rs);
    out.machines.push_back(std::move(m));
  }
  return out;
}

std::vector<std::size_t> identity_map(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return m;
}

}  // namespace

GrowResult remove_machines(const AgentSpec& agent, const std::vector<std::size_t>& doomed) {
  std::vector<std::size_t> old_to_new(agent.n(), kNoSource);
  GrowResult r;
  for (std::size_t v = 0; v < agent.n(); ++v) {
    if (std::find(doomed.begin(), doomed.end(), v) != doomed.end()) continue;
    old_to_new[v] = r.node_map.size();
    r.node_map.push_back(v);
  }
  MessageGraph g{r.node_map.size(), {}, agent.graph.fan_out_cap};
  for (const Edge& e : agent.graph.edges)
    if (old_to_new[e.from] != kNoSource && old_to_new[e.to] != kNoSource)
      g.edges.push_back({old_to_new[e.from], old_to_new[e.to]});
  r.agent = rewire(agent, g, r.node_map, {});
  return r;
}

GrowResult grow_machines(const AgentSpec& agent, std::size_t target_n, const GrowthPolicy& policy, Rng& rng,
                         GrowthState& state) {
  const std::size_t n = agent.n();
  if (target_n < n) {
    std::vector<std::size_t> doomed;
    for (std::size_t v = n; v-- > 0 && n - doomed.size() > target_n;)
      if (agent.machines[v].role == MachineRole::generic) doomed.push_back(v);
    return remove_machines(agent, doomed);
  }

  GrowResult r;
  r.node_map = identity_map(n);
  if (target_n == n) {
    r.agent = agent;
    return r;
  }

  Symbol default_card = 1;
  for (const auto& m : agent.machines)
    if (m.role == MachineRole::generic) default_card = std::max(default_card, m.cardinality);
  if (agent.machines.empty()) default_card = 2;

  MessageGraph g = agent.graph;
  std::vector<std::size_t> out_deg(n, 0);
  for (const Edge& e : g.edges) ++out_deg[e.from];

  std::vector<MachineSpec> fresh;
  std::size_t size = n;
  while (size < target_n) {
    MachineSpec m;
    m.cardinality = default_card;
    if (!policy.guttman.empty()) {
      if (state.guttman_next >= policy.guttman.size() ||
          policy.guttman[state.guttman_next].unlock_gfer > state.gfer_max) {
        r.stalled = true;
        break;
      }
      const GuttmanTemplate& t = policy.guttman[state.guttman_next++];
      m.label = t.label;
      if (t.cardinality > 0) m.cardinality = t.cardinality;
    }
    std::vector<std::size_t> eligible;
    for (std::size_t v = 0; v < size; ++v)
      if (out_deg[v] < g.fan_out_cap) eligible.push_back(v);
    if (!eligible.empty()) {
      const std::size_t parent = eligible[rng.below(eligible.size())];
      g.edges.push_back({parent, size});
      ++out_deg[parent];
    } else if (policy.require_connected && size > 0) {
      ValidationReport rep;
      rep.violations.push_back("graph constraint unsatisfiable: no node below fan-out cap D = " +
                               std::to_string(g.fan_out_cap) + " can attach a new machine");
      throw ValidationFailure(rep);
    }
    out_deg.push_back(0);
    fresh.push_back(std::move(m));
    r.node_map.push_back(kNoSource);
    ++size;
  }
  g.n = size;

  // Rules for the new machines need their final arity.
  const Topology t_new = topology(g);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const std::size_t v = n + i;
    const std::size_t arity = t_new.parents[v].size();
    fresh[i].rule = policy.family == GrowthPolicy::RuleFamily::identity
                        ? identity_ring_rule(agent.external_cards.size(), arity)
                        : random_ring_rule(fresh[i].cardinality, agent.msg_card, agent.external_cards.size(), arity,
                                           rng);
  }
  r.added = fresh.size();
  r.agent = rewire(agent, g, r.node_map, fresh);
  return r;
}

AgentSpec resize_state_and_message_spaces(const AgentSpec& agent, Symbol new_state_card, Symbol new_msg_card) {
  if (new_state_card < 1 || new_msg_card < 1) throw ContractViolation("resized spaces must have size >= 1");
  const Topology topo = topology(agent.graph);
  AgentSpec out = agent;
  out.msg_card = new_msg_card;
  for (std::size_t v = 0; v < out.n(); ++v) {
    MachineSpec& m = out.machines[v];
    RuleReshape rs = same_wiring(agent, topo.parents[v].size(), m.cardinality);
    if (m.role == MachineRole::generic) {
      rs.new_state_card = new_state_card;
      m.cardinality = new_state_card;
    }
    rs.new_msg_card = new_msg_card;
    m.rule = reshape_rule(m.rule, rs);
  }
  return out;
}

AgentSpec set_fan_out_cap(const AgentSpec& agent, std::size_t cap) {
  const Topology topo = topology(agent.graph);
  MessageGraph g{agent.graph.n, {}, cap};
  for (const Edge& e : agent.graph.edges) {
    const auto& ch = topo.children[e.from];
    const auto rank = static_cast<std::size_t>(std::find(ch.begin(), ch.end(), e.to) - ch.begin());
    if (rank < cap) g.edges.push_back(e);
  }
  if (g.edges.size() == agent.graph.edges.size()) {
    AgentSpec out = agent;
    out.graph.fan_out_cap = cap;
    return out;
  }
  return rewire(agent, g, identity_map(agent.n()), {});
}

AgentSpec rebind_external(const AgentSpec& agent, std::vector<Symbol> new_external_cards,
                          const std::vector<std::size_t>& external_map) {
  const Topology topo = topology(agent.graph);
  AgentSpec out = agent;
  out.external_cards = std::move(new_external_cards);
  for (std::size_t v = 0; v < out.n(); ++v) {
    MachineSpec& m = out.machines[v];
    RuleReshape rs = same_wiring(agent, topo.parents[v].size(), m.cardinality);
    rs.new_external_cards = out.external_cards;
    rs.external_map = external_map;
    rs.external_map.resize(out.external_cards.size(), kNoSource);
    m.rule = reshape_rule(m.rule, rs);
  }
  return out;
}

AppliedParams apply_params(const AgentSpec& society, const AgentSpec& environment, const ComputationParams& params,
                           const EvolutionPolicy& policy, Rng& rng, GrowthState& growth) {
  AppliedParams out;
  AgentSpec s = set_fan_out_cap(society, params.fan_out);
  GrowResult g = grow_machines(s, params.n_machines, policy.growth, rng, growth);
  out.growth_stalled = g.stalled;
  s = resize_state_and_message_spaces(g.agent, static_cast<Symbol>(params.state_card),
                                      static_cast<Symbol>(params.msg_card));
  s.tau = params.tau;
  s.sigma = sigma_from_precision(params.r_society, policy.r_max);

  AgentSpec e = environment;
  e.sigma = sigma_from_precision(params.r_environment, policy.r_max);
  if (e.external_cards != s.cardinalities() || g.node_map != identity_map(society.n()))
    e = rebind_external(e, s.cardinalities(), g.node_map);
  out.society = std::move(s);
  out.environment = std::move(e);
  out.society_map = std::move(g.node_map);
  return out;
}

}  // namespace coevo
