#include "coevo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coevo/detectors.hpp"

namespace coevo {

namespace {

bool frozen(const MachineSpec& m) {
  return m.role != MachineRole::generic || !std::holds_alternative<LinearRingRule>(m.rule);
}

std::size_t affine_size(const EncodingLayout::Slot& s) { return 2 + s.n_external + s.n_parent_slots; }

// Potential parents of v when edges are encoded: every other node, ascending.
std::vector<std::size_t> potential_parents(std::size_t n, std::size_t v) {
  std::vector<std::size_t> p;
  for (std::size_t u = 0; u < n; ++u)
    if (u != v) p.push_back(u);
  return p;
}

void write_affine(const AffineMap& am, std::vector<Symbol>& out, std::size_t& at, const std::vector<std::size_t>& parents,
                  const std::vector<std::size_t>* slots) {
  out[at++] = am.a;
  for (Symbol b : am.b) out[at++] = b;
  if (slots == nullptr) {
    for (Symbol c : am.c) out[at++] = c;
  } else {
    for (std::size_t u : *slots) {
      const auto it = std::find(parents.begin(), parents.end(), u);
      out[at++] = it == parents.end() ? 0 : am.c[static_cast<std::size_t>(it - parents.begin())];
    }
  }
  out[at++] = am.d;
}

AffineMap read_affine(const std::vector<Symbol>& in, std::size_t& at, std::size_t n_external,
                      const std::vector<std::size_t>& parents, const std::vector<std::size_t>* slots,
                      std::size_t n_parent_slots) {
  AffineMap am;
  am.a = in[at++];
  am.b.assign(in.begin() + static_cast<std::ptrdiff_t>(at), in.begin() + static_cast<std::ptrdiff_t>(at + n_external));
  at += n_external;
  if (slots == nullptr) {
    am.c.assign(in.begin() + static_cast<std::ptrdiff_t>(at),
                in.begin() + static_cast<std::ptrdiff_t>(at + n_parent_slots));
  } else {
    for (std::size_t u : parents) {
      const auto it = std::find(slots->begin(), slots->end(), u);
      am.c.push_back(in[at + static_cast<std::size_t>(it - slots->begin())]);
    }
  }
  at += n_parent_slots;
  am.d = in[at++];
  return am;
}

std::vector<std::size_t> out_degrees(std::size_t n, const std::vector<Edge>& fixed, const std::vector<Edge>& cand,
                                     const std::vector<std::uint8_t>& bits) {
  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : fixed) ++deg[e.from];
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (bits[i]) ++deg[cand[i].from];
  return deg;
}

}  // namespace

std::size_t EncodingLayout::dimension() const {
  return ring_size + (with_rho ? kParamCount : 0) + edge_candidates.size();
}

EncodingLayout make_layout(const AgentSpec& agent, bool with_rho, bool with_edges) {
  EncodingLayout l;
  l.with_rho = with_rho;
  l.with_edges = with_edges;
  const Topology topo = topology(agent.graph);
  if (with_edges) {
    for (const Edge& e : agent.graph.edges)
      if (frozen(agent.machines[e.from]) || frozen(agent.machines[e.to])) l.fixed_edges.push_back(e);
    for (std::size_t u = 0; u < agent.n(); ++u)
      for (std::size_t v = 0; v < agent.n(); ++v)
        if (u != v && !frozen(agent.machines[u]) && !frozen(agent.machines[v])) l.edge_candidates.push_back({u, v});
  }
  for (std::size_t v = 0; v < agent.n(); ++v) {
    if (frozen(agent.machines[v])) continue;
    EncodingLayout::Slot s;
    s.machine = v;
    s.offset = l.ring_size;
    s.state_modulus = agent.machines[v].cardinality;
    s.msg_modulus = agent.msg_card;
    s.n_external = agent.external_cards.size();
    s.n_parent_slots = with_edges ? agent.n() - 1 : topo.parents[v].size();
    l.slots.push_back(s);
    l.ring_size += 2 * affine_size(s);
  }
  return l;
}

PolicyEncoding encode(const EncodingLayout& layout, const AgentSpec& agent, const AllocationDistribution* rho) {
  PolicyEncoding x;
  x.ring.assign(layout.ring_size, 0);
  const Topology topo = topology(agent.graph);
  const bool edges = layout.with_edges;
  for (const auto& s : layout.slots) {
    const auto& r = std::get<LinearRingRule>(agent.machines[s.machine].rule);
    const std::vector<std::size_t> slots = potential_parents(agent.n(), s.machine);
    std::size_t at = s.offset;
    const auto* sp = edges ? &slots : nullptr;
    write_affine(r.state, x.ring, at, topo.parents[s.machine], sp);
    write_affine(r.message, x.ring, at, topo.parents[s.machine], sp);
  }
  if (layout.with_rho) {
    const AllocationDistribution a = rho ? *rho : AllocationDistribution::uniform();
    for (double p : a.rho) x.logits.push_back(std::log(std::max(p, 1e-12)));
  }
  x.edges.assign(layout.edge_candidates.size(), 0);
  for (std::size_t i = 0; i < layout.edge_candidates.size(); ++i)
    x.edges[i] = std::find(agent.graph.edges.begin(), agent.graph.edges.end(), layout.edge_candidates[i]) !=
                 agent.graph.edges.end();
  return x;
}

DecodedPolicy decode(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x) {
  if (x.ring.size() != layout.ring_size || x.edges.size() != layout.edge_candidates.size() ||
      x.logits.size() != (layout.with_rho ? kParamCount : 0))
    throw ValidationFailure(ValidationReport{{"encoding does not match its layout"}});
  DecodedPolicy d{base, AllocationDistribution::uniform()};
  const bool edges = layout.with_edges;
  if (edges) {
    d.agent.graph.edges = layout.fixed_edges;
    for (std::size_t i = 0; i < layout.edge_candidates.size(); ++i)
      if (x.edges[i]) d.agent.graph.edges.push_back(layout.edge_candidates[i]);
    std::sort(d.agent.graph.edges.begin(), d.agent.graph.edges.end());
  }
  const Topology topo = topology(d.agent.graph);
  for (const auto& s : layout.slots) {
    const std::vector<std::size_t> slots = potential_parents(base.n(), s.machine);
    const auto* sp = edges ? &slots : nullptr;
    std::size_t at = s.offset;
    LinearRingRule r;
    r.state = read_affine(x.ring, at, s.n_external, topo.parents[s.machine], sp, s.n_parent_slots);
    r.message = read_affine(x.ring, at, s.n_external, topo.parents[s.machine], sp, s.n_parent_slots);
    d.agent.machines[s.machine].rule = std::move(r);
  }
  if (layout.with_rho) d.rho = allocation_from_logits(x.logits);
  const ValidationReport rep = validate_agent(d.agent);
  if (!rep.ok()) throw ValidationFailure(rep);
  return d;
}

PolicyEncoding random_encoding(const EncodingLayout& layout, const AgentSpec& base, Rng& rng) {
  PolicyEncoding x;
  x.ring.resize(layout.ring_size);
  for (const auto& s : layout.slots) {
    const std::size_t half = affine_size(s);
    for (std::size_t i = 0; i < half; ++i)
      x.ring[s.offset + i] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(s.state_modulus)));
    for (std::size_t i = 0; i < half; ++i)
      x.ring[s.offset + half + i] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(s.msg_modulus)));
  }
  if (layout.with_rho)
    for (std::size_t i = 0; i < kParamCount; ++i) x.logits.push_back(4.0 * rng.uniform() - 2.0);
  x.edges.assign(layout.edge_candidates.size(), 0);
  std::vector<std::size_t> deg = out_degrees(base.n(), layout.fixed_edges, layout.edge_candidates, x.edges);
  for (std::size_t i = 0; i < x.edges.size(); ++i) {
    const std::size_t u = layout.edge_candidates[i].from;
    if (rng.bernoulli(0.5) && deg[u] < base.graph.fan_out_cap) {
      x.edges[i] = 1;
      ++deg[u];
    }
  }
  return x;
}

PolicyEncoding neighbour(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x, Rng& rng) {
  const std::size_t dim = layout.dimension();
  if (dim == 0) return x;
  for (int attempt = 0; attempt < 64; ++attempt) {
    PolicyEncoding y = x;
    std::size_t i = rng.below(dim);
    if (i < layout.ring_size) {
      // Locate the coordinate's modulus.
      Symbol modulus = 1;
      for (const auto& s : layout.slots) {
        const std::size_t half = affine_size(s);
        if (i >= s.offset && i < s.offset + 2 * half) modulus = i < s.offset + half ? s.state_modulus : s.msg_modulus;
      }
      if (modulus < 2) continue;
      y.ring[i] = mod(y.ring[i] + (rng.bernoulli(0.5) ? 1 : -1), modulus);
      return y;
    }
    i -= layout.ring_size;
    if (layout.with_rho) {
      if (i < kParamCount) {
        y.logits[i] += 0.5 * rng.normal();
        return y;
      }
      i -= kParamCount;
    }
    if (y.edges[i]) {
      y.edges[i] = 0;
      return y;
    }
    const auto deg = out_degrees(base.n(), layout.fixed_edges, layout.edge_candidates, y.edges);
    if (deg[layout.edge_candidates[i].from] >= base.graph.fan_out_cap) continue;
    y.edges[i] = 1;
    return y;
  }
  return x;
}

double evaluate_agents(const AgentSpec& society, const AgentSpec& environment, const AllocationDistribution& rho,
                       const ObjectiveSpec& objective, const SeedPlan& seeds) {
  const std::size_t horizon = objective.myopic ? 1 : std::max<std::size_t>(1, objective.horizon);
  AgentSpec s = society;
  AgentSpec e = environment;
  GrowthState growth;
  double score = 0.0;
  double weight = 1.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double bits = harvest_mi(s, e, objective.harvest, seeds.child(t));
    const double g = scale_harvest(bits, s, e, objective.harvest, objective.proxy, objective.evolution.r_max);
    score += weight * g;
    weight *= objective.discount;
    if (t + 1 == horizon || !objective.evolution.enabled) continue;
    EvolutionPolicy pol = objective.evolution;
    pol.allocation = rho;
    growth.gfer_max = std::max(growth.gfer_max, g);
    const EvolutionOutcome o = evolve_parameters(extract_params(s, e, pol.r_max), g, pol);
    Rng rng = seeds.stream({t, AgentId::society, 0, 0, Purpose::growth});
    AppliedParams ap = apply_params(s, e, o.params, pol, rng, growth);
    if (!validate_pair(ap.society, ap.environment).ok()) break;
    s = std::move(ap.society);
    e = std::move(ap.environment);
  }
  return score;
}

double evaluate_policy(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x,
                       const AgentSpec& environment, const ObjectiveSpec& objective, const SeedPlan& seeds) {
  try {
    const DecodedPolicy d = decode(layout, base, x);
    return evaluate_agents(d.agent, environment, d.rho, objective, seeds);
  } catch (const ValidationFailure&) {
    return kInvalidScore;
  }
}

InnerResult inner_optimize(const AgentSpec& society, const AgentSpec& environment, const ObjectiveSpec& objective,
                           const InnerOptions& options, Rng& rng) {
  if (options.budget == 0) throw ContractViolation("inner_optimize needs a budget of at least 1");
  const EncodingLayout layout = make_layout(society, objective.evolution.enabled, options.optimize_edges);
  const SeedPlan crn(rng.next_u64());
  const std::size_t patience = options.patience ? options.patience : std::max<std::size_t>(8, 2 * layout.dimension());

  InnerResult out;
  out.encoding = encode(layout, society, &objective.evolution.allocation);
  PolicyEncoding current;
  double current_score = kInvalidScore;
  bool restart = true;
  std::size_t stale = 0;
  for (std::size_t i = 0; i < options.budget; ++i) {
    const PolicyEncoding cand = restart ? random_encoding(layout, society, rng) : neighbour(layout, society, current, rng);
    const double s = evaluate_policy(layout, society, cand, environment, objective, crn);
    bool accepted = false;
    if (restart || s > current_score) {
      accepted = true;
      current = cand;
      current_score = s;
      stale = 0;
      restart = false;
    } else if (++stale >= patience) {
      restart = true;
    }
    if (s > out.score) {
      out.score = s;
      out.encoding = cand;
    }
    out.history.push_back({options.round, i, s, accepted});
    out.best_so_far.push_back(out.score);
  }
  try {
    const DecodedPolicy d = decode(layout, society, out.encoding);
    out.society = d.agent;
    out.rho = d.rho;
  } catch (const ValidationFailure&) {
    out.society = society;
    out.rho = objective.evolution.allocation;
  }
  return out;
}

std::vector<AgentSpec> outer_random(const EnvironmentFamily& family, std::size_t samples, Rng& rng) {
  std::vector<AgentSpec> out;
  for (std::size_t s = 0; s < samples; ++s) {
    AgentSpec a;
    a.graph = directed_erdos_renyi(family.n, family.edge_probability, rng);
    a.tau = family.tau;
    a.msg_card = family.msg_card;
    a.sigma = family.sigma;
    a.external_cards = family.external_cards;
    const Topology topo = topology(a.graph);
    for (std::size_t v = 0; v < family.n; ++v) {
      MachineSpec m;
      m.cardinality = family.cardinality;
      m.rule = random_ring_rule(family.cardinality, family.msg_card, family.external_cards.size(),
                                topo.parents[v].size(), rng);
      a.machines.push_back(std::move(m));
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

double responsiveness_exact(const AgentSpec& env, std::size_t X, std::size_t In) {
  const PropagationTable table = propagation_table(env);
  double cmi = 0.0;
  std::vector<double> marginal(X);
  for (std::size_t x = 0; x < X; ++x) {
    std::fill(marginal.begin(), marginal.end(), 0.0);
    for (std::size_t e = 0; e < In; ++e)
      for (const auto& [y, p] : table.at(x, e)) marginal[y] += p / static_cast<double>(In);
    double term = 0.0;
    for (std::size_t e = 0; e < In; ++e)
      for (const auto& [y, p] : table.at(x, e))
        if (p > 0.0) term += p / static_cast<double>(In) * std::log2(p / marginal[y]);
    cmi += term / static_cast<double>(X);
  }
  return std::max(0.0, cmi);
}

double entropy_of(const std::map<std::vector<std::size_t>, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) h -= c / n * std::log2(c / n);
  return h;
}

double responsiveness_sampled(const AgentSpec& env, std::uint64_t samples, std::uint64_t seed) {
  const SeedPlan plan(seed);
  const Topology topo = topology(env.graph);
  const auto cards = env.cardinalities();
  std::map<std::vector<std::size_t>, double> xe, xy, x1, xey;
  for (std::uint64_t r = 0; r < samples; ++r) {
    Rng draw = plan.stream({0, AgentId::environment, 0, r, Purpose::sampler});
    StateVec x(env.n());
    for (std::size_t v = 0; v < x.size(); ++v) x[v] = static_cast<Symbol>(draw.below(static_cast<std::uint64_t>(cards[v])));
    ExternalInput e(env.external_cards.size());
    for (std::size_t j = 0; j < e.size(); ++j)
      e[j] = static_cast<Symbol>(draw.below(static_cast<std::uint64_t>(env.external_cards[j])));
    std::vector<Rng> rngs;
    for (std::size_t v = 0; v < env.n(); ++v)
      rngs.push_back(plan.stream({0, AgentId::environment, static_cast<std::uint32_t>(v), r, Purpose::kernel}));
    AgentState s = make_agent_state(env, topo, x);
    for (std::size_t t = 0; t < env.tau; ++t) s = run_timestep(env, topo, s, e, rngs).next;
    const std::size_t fx = flatten(x, cards), fe = flatten(e, env.external_cards), fy = flatten(s.states, cards);
    xe[{fx, fe}] += 1.0;
    xy[{fx, fy}] += 1.0;
    x1[{fx}] += 1.0;
    xey[{fx, fe, fy}] += 1.0;
  }
  const double n = static_cast<double>(samples);
  return std::max(0.0, entropy_of(xe, n) + entropy_of(xy, n) - entropy_of(x1, n) - entropy_of(xey, n));
}

}  // namespace

double responsiveness(const AgentSpec& environment, std::uint64_t samples, std::size_t limit, std::uint64_t seed) {
  const std::size_t X = joint_size(environment.cardinalities());
  const std::size_t In = joint_size(environment.external_cards);
  const bool fits = X <= limit && In <= limit && X * In <= limit;
  if (fits) return responsiveness_exact(environment, X, In);
  if (samples == 0) throw ContractViolation("probe space exceeds the limit and no samples were requested");
  return responsiveness_sampled(environment, samples, seed);
}

AdversarialResult outer_adversarial(const AgentSpec& initial_environment, const AgentSpec& society,
                                    const ObjectiveSpec& objective, const AdversarialOptions& options, Rng& rng) {
  if (options.rounds == 0) throw ContractViolation("outer_adversarial needs at least one round");
  AdversarialResult out;
  AgentSpec env = initial_environment;
  auto resp = [&](const AgentSpec& e) { return responsiveness(e, options.probe_samples); };
  double env_resp = resp(env);
  bool feasible = env_resp >= options.epsilon;
  const EncodingLayout layout = make_layout(env, false, false);

  for (std::size_t round = 0; round < options.rounds; ++round) {
    InnerOptions io = options.society;
    io.round = round;
    out.society = inner_optimize(society, env, objective, io, rng);
    out.round_values.push_back(out.society.score);
    if (round + 1 == options.rounds) break;

    const SeedPlan crn(rng.next_u64());
    PolicyEncoding x = encode(layout, env, nullptr);
    double value = evaluate_agents(out.society.society, env, out.society.rho, objective, crn);
    std::vector<double> trace{value};
    for (std::size_t j = 0; j < options.adversary_budget; ++j) {
      const PolicyEncoding cand = neighbour(layout, env, x, rng);
      AgentSpec candidate_env;
      try {
        candidate_env = decode(layout, env, cand).agent;
      } catch (const ValidationFailure&) {
        continue;
      }
      const double r = resp(candidate_env);
      if (r < options.epsilon) continue;
      const double s = evaluate_agents(out.society.society, candidate_env, out.society.rho, objective, crn);
      // An infeasible incumbent yields to any feasible candidate.
      if (!feasible || s < value) {
        x = cand;
        env = std::move(candidate_env);
        env_resp = r;
        value = s;
        feasible = true;
        trace.push_back(s);
      }
    }
    out.adversary_traces.push_back(std::move(trace));
  }
  out.environment = env;
  out.environment_responsiveness = env_resp;
  out.infeasible = !feasible;
  return out;
}

}  // namespace coevo
