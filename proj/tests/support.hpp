#pragma once

#include <utility>
#include <vector>

#include "coevo/core.hpp"
#include "coevo/engine.hpp"
#include "coevo/evolution.hpp"

namespace coevo::test {

inline AffineMap affine(Symbol a, std::vector<Symbol> b, std::vector<Symbol> c, Symbol d) {
  return AffineMap{a, std::move(b), std::move(c), d};
}

/// x' = state map, m = message map.
inline LinearRingRule ring(AffineMap state, AffineMap message) { return LinearRingRule{std::move(state), std::move(message)}; }

/// x' = e_0, m = 0.
inline LinearRingRule copy_external(std::size_t n_external, std::size_t arity) {
  std::vector<Symbol> b(n_external, 0);
  if (!b.empty()) b[0] = 1;
  return ring(affine(0, b, std::vector<Symbol>(arity, 0), 0),
              affine(0, std::vector<Symbol>(n_external, 0), std::vector<Symbol>(arity, 0), 0));
}

inline AgentSpec single_machine(Symbol card, UpdateRule rule, std::vector<Symbol> external_cards, double sigma = 0.0,
                                std::size_t tau = 1, Symbol msg_card = 2) {
  AgentSpec a;
  MachineSpec m;
  m.cardinality = card;
  m.rule = std::move(rule);
  a.machines.push_back(std::move(m));
  a.graph = {1, {}, 1};
  a.tau = tau;
  a.msg_card = msg_card;
  a.sigma = sigma;
  a.external_cards = std::move(external_cards);
  return a;
}

/// One binary machine that copies the other agent's single binary machine.
inline AgentSpec binary_copier(double sigma = 0.0) { return single_machine(2, copy_external(1, 0), {2}, sigma); }

/// One binary machine that keeps its state.
inline AgentSpec binary_identity(double sigma = 0.0) {
  return single_machine(2, identity_ring_rule(1, 0), {2}, sigma);
}

inline std::vector<Rng> streams(std::size_t n, std::uint64_t seed = 0) {
  std::vector<Rng> r;
  for (std::size_t i = 0; i < n; ++i) r.emplace_back(seed + i);
  return r;
}

// Random agent with linear-ring rules over a random graph.
inline AgentSpec random_agent(std::size_t n, Symbol card, Symbol msg, std::vector<Symbol> ext, Rng& rng) {
  AgentSpec a;
  a.tau = 1 + rng.below(3);
  a.msg_card = msg;
  a.external_cards = std::move(ext);
  a.graph.n = n;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && rng.bernoulli(0.4)) a.graph.edges.push_back({u, v});
  a.graph.fan_out_cap = n;
  const Topology topo = topology(a.graph);
  for (std::size_t v = 0; v < n; ++v) {
    MachineSpec m;
    m.cardinality = card;
    m.rule = random_ring_rule(card, msg, a.external_cards.size(), topo.parents[v].size(), rng);
    a.machines.push_back(m);
  }
  return a;
}

}  // namespace coevo::test
