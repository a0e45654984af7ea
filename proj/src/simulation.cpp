#include "coevo/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "coevo/channel.hpp"
#include "coevo/detectors.hpp"
#include "coevo/rule_ops.hpp"

namespace coevo {

std::string harvest_mode_name(HarvestConfig::Mode m) {
  switch (m) {
    case HarvestConfig::Mode::mi_exact: return "mi_exact";
    case HarvestConfig::Mode::mi_plugin: return "mi_plugin";
    case HarvestConfig::Mode::kelly: return "kelly";
  }
  return "?";
}

double harvest_mi(const AgentSpec& society, const AgentSpec& environment, const HarvestConfig& cfg,
                  const SeedPlan& seeds) {
  switch (cfg.mode) {
    case HarvestConfig::Mode::mi_exact:
      return mi_exact(society, environment, cfg.boundary, cfg.flattening_limit);
    case HarvestConfig::Mode::mi_plugin:
      return mi_plugin(
          ensemble_rollout(society, environment, cfg.boundary, seeds, cfg.replicates, cfg.flattening_limit),
          cfg.miller_madow);
    case HarvestConfig::Mode::kelly:
      break;
  }
  throw ContractViolation("the kelly harvest has no mutual-information form");
}

double population(const AgentSpec& society, const AgentSpec& environment, PopulationProxy proxy, double r_max) {
  switch (proxy) {
    case PopulationProxy::n_machines: return static_cast<double>(society.n());
    case PopulationProxy::sum_log2_card: {
      double s = 0.0;
      for (const auto& m : society.machines) s += std::log2(static_cast<double>(m.cardinality));
      return s;
    }
    case PopulationProxy::r_environment: return precision_from_sigma(environment.sigma, r_max);
  }
  return 0.0;
}

namespace {

StateVec uniform_states(const AgentSpec& agent, const SeedPlan& plan, AgentId who) {
  StateVec s(agent.n());
  for (std::size_t v = 0; v < s.size(); ++v) {
    Rng rng = plan.stream({0, who, static_cast<std::uint32_t>(v), 0, Purpose::boundary});
    s[v] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(agent.machines[v].cardinality)));
  }
  return s;
}

// Carries a society boundary state across a structural change.
AgentState remap_state(const AgentState& old, const AgentSpec& fresh, const std::vector<std::size_t>& node_map) {
  StateVec states(fresh.n(), 0);
  for (std::size_t v = 0; v < fresh.n(); ++v)
    if (node_map[v] != kNoSource) states[v] = mod(old.states[node_map[v]], fresh.machines[v].cardinality);
  AgentState s = make_agent_state(fresh, topology(fresh.graph), std::move(states));
  for (std::size_t v = 0; v < fresh.n(); ++v)
    if (node_map[v] != kNoSource && node_map[v] < old.tapes.size()) s.tapes[v] = old.tapes[node_map[v]];
  return s;
}

double scaled_gfer(double bits, const AgentSpec& society, const AgentSpec& environment, const SimulationConfig& cfg) {
  return scale_harvest(bits, society, environment, cfg.harvest, cfg.proxy, cfg.evolution.r_max);
}

// Myopic hill climb over the allocation: each candidate is scored by the
// GFER its evolved agents would harvest in the next iteration.
AllocationDistribution tune_rho(const SimulationConfig& cfg, const AgentSpec& society, const AgentSpec& environment,
                                double gfer_effective, const GrowthState& growth, const SeedPlan& plan,
                                std::uint64_t t, const AllocationDistribution& current) {
  if (cfg.harvest.mode == HarvestConfig::Mode::kelly) return current;
  Rng rng = plan.stream({t, AgentId::society, 0, 0, Purpose::optimizer});
  const SeedPlan eval_seeds = plan.child(0x7000 + t);
  auto score = [&](const AllocationDistribution& rho) {
    EvolutionPolicy pol = cfg.evolution;
    pol.allocation = rho;
    const EvolutionOutcome o =
        evolve_parameters(extract_params(society, environment, pol.r_max), gfer_effective, pol);
    Rng grow = plan.stream({t, AgentId::society, 0, 0, Purpose::growth});
    GrowthState g = growth;
    try {
      const AppliedParams ap = apply_params(society, environment, o.params, pol, grow, g);
      if (!validate_pair(ap.society, ap.environment).ok()) return -1.0;
      return scaled_gfer(harvest_mi(ap.society, ap.environment, cfg.harvest, eval_seeds), ap.society,
                         ap.environment, cfg);
    } catch (const ValidationFailure&) {
      return -1.0;
    } catch (const ContractViolation&) {
      return -1.0;
    }
  };
  std::vector<double> z(kParamCount);
  for (std::size_t i = 0; i < kParamCount; ++i) z[i] = std::log(std::max(current.rho[i], 1e-12));
  AllocationDistribution best = current;
  double best_score = score(current);
  for (std::size_t c = 0; c < cfg.rho_candidates; ++c) {
    std::vector<double> cand = z;
    cand[rng.below(kParamCount)] += rng.normal();
    const AllocationDistribution rho = allocation_from_logits(cand);
    const double s = score(rho);
    if (s > best_score) {
      best_score = s;
      best = rho;
      for (std::size_t i = 0; i < kParamCount; ++i) z[i] = std::log(std::max(rho.rho[i], 1e-12));
    }
  }
  return best;
}

double kelly_step(const KellyHarvest& k, const AgentState& society_start, const StateVec& environment_end) {
  if (k.odds.empty() || k.allocation_machines.size() != k.odds.size())
    throw ContractViolation("kelly harvest needs one allocation machine per outcome");
  if (k.winnings_machine >= environment_end.size())
    throw ContractViolation("kelly winnings machine index out of range");
  const auto w = static_cast<std::size_t>(environment_end[k.winnings_machine]);
  if (w >= k.odds.size()) throw ContractViolation("winnings outcome outside the odds vector");
  std::vector<double> b(k.odds.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::size_t m = k.allocation_machines[i];
    if (m >= society_start.states.size()) throw ContractViolation("kelly allocation machine index out of range");
    total += b[i] = static_cast<double>(society_start.states[m]);
  }
  if (total <= 0.0) std::fill(b.begin(), b.end(), 1.0);
  return kelly_log_return(k.odds, b, w);
}

}  // namespace

double scale_harvest(double bits, const AgentSpec& society, const AgentSpec& environment, const HarvestConfig& cfg,
                     PopulationProxy proxy, double r_max) {
  double g = cfg.scale * bits;
  if (cfg.population_gain != 0.0) g *= std::pow(population(society, environment, proxy, r_max), cfg.population_gain);
  return g;
}

SimulationLog run_simulation(const SimulationConfig& cfg, const SimulationHooks& hooks) {
  {
    const ValidationReport r = validate_pair(cfg.society, cfg.environment);
    if (!r.ok()) throw ValidationFailure(r);
  }
  const SeedPlan plan(cfg.seed);
  AgentSpec society = cfg.society;
  AgentSpec environment = cfg.environment;

  SimulationLog log;
  if (cfg.initial.kind == InitialState::Kind::point) {
    log.initial_society = cfg.initial.society;
    log.initial_environment = cfg.initial.environment;
  } else {
    const SeedPlan init = plan.child(3);
    log.initial_society = uniform_states(society, init, AgentId::society);
    log.initial_environment = uniform_states(environment, init, AgentId::environment);
  }
  if (log.initial_society.size() != society.n() || log.initial_environment.size() != environment.n())
    throw ContractViolation("initial state length does not match the agents");

  Boundary boundary{make_agent_state(society, topology(society.graph), log.initial_society),
                    make_agent_state(environment, topology(environment.graph), log.initial_environment)};
  double store = cfg.harvest.store ? quantize_energy(*cfg.harvest.store) : 0.0;
  GrowthState growth;
  AllocationDistribution rho = cfg.evolution.allocation;

  for (std::uint64_t t = 0; t < cfg.iterations; ++t) {
    if (hooks.should_stop && hooks.should_stop()) {
      log.truncated = true;
      log.truncation_reason = "interrupted";
      break;
    }
    LogRow row;
    row.t = t;
    row.params = extract_params(society, environment, cfg.evolution.r_max);
    row.state_profile = society.cardinalities();
    row.edges = society.graph.edges.size();
    row.sigma_society = society.sigma;
    row.sigma_environment = environment.sigma;
    row.population = population(society, environment, cfg.proxy, cfg.evolution.r_max);
    row.giant_fraction = giant_component_fraction(society.graph);

    const IterationResult it = run_iteration(society, environment, boundary, plan, t);
    row.e_society = it.trace.society.e;
    row.e_environment = it.trace.environment.e;
    row.society_end = it.trace.society_end;
    row.environment_end = it.trace.environment_end;

    double raw = 0.0;
    if (cfg.harvest.mode == HarvestConfig::Mode::kelly) {
      const double lr = kelly_step(cfg.harvest.kelly, boundary.society, it.trace.environment_end);
      row.kelly_log_growth = lr;
      raw = cfg.harvest.scale * std::max(0.0, lr);
      row.harvest.estimator = "kelly";
    } else {
      row.harvest_bits = harvest_mi(society, environment, cfg.harvest, plan.child(0x4000 + t));
      raw = scaled_gfer(row.harvest_bits, society, environment, cfg);
      row.harvest.estimator = cfg.harvest.mode == HarvestConfig::Mode::mi_exact
                                  ? "exact"
                                  : "plugin(" + std::to_string(cfg.harvest.replicates) + ")";
    }
    row.harvest.gfer_raw = raw;
    if (cfg.harvest.store) {
      row.harvest.store_before = store;
      const DepletionResult d = deplete(store, raw);
      row.harvest.gfer_effective = d.gfer_effective;
      store = d.store;
      row.harvest.store_after = store;
    } else {
      row.harvest.gfer_effective = raw;
    }

    Boundary next = it.end;
    if (cfg.evolution.enabled) {
      growth.gfer_max = std::max(growth.gfer_max, row.harvest.gfer_effective);
      if (cfg.rho_schedule == RhoSchedule::per_iteration)
        rho = tune_rho(cfg, society, environment, row.harvest.gfer_effective, growth, plan, t, rho);
      EvolutionPolicy pol = cfg.evolution;
      pol.allocation = rho;
      const EvolutionOutcome o = evolve_parameters(row.params, row.harvest.gfer_effective, pol);
      row.clamp_discard = o.clamp_discard;
      row.rounding_loss = o.rounding_loss;
      Rng grow = plan.stream({t, AgentId::society, 0, 0, Purpose::growth});
      try {
        AppliedParams ap = apply_params(society, environment, o.params, pol, grow, growth);
        row.growth_stalled = ap.growth_stalled;
        const ValidationReport r = validate_pair(ap.society, ap.environment);
        if (!r.ok()) throw ValidationFailure(r);
        next.society = remap_state(it.end.society, ap.society, ap.society_map);
        society = std::move(ap.society);
        environment = std::move(ap.environment);
      } catch (const ValidationFailure& f) {
        row.rho = rho;
        log.rows.push_back(row);
        if (hooks.on_row) hooks.on_row(row);
        log.truncated = true;
        log.truncation_reason = "evolution produced an invalid agent at iteration " + std::to_string(t) + ": " +
                                f.report().str();
        return log;
      }
    }
    row.rho = rho;
    boundary = std::move(next);
    log.rows.push_back(row);
    if (hooks.on_row) hooks.on_row(log.rows.back());
  }
  return log;
}

std::vector<double> gfer_series(const SimulationLog& log) {
  std::vector<double> g;
  for (const auto& r : log.rows) g.push_back(r.harvest.gfer_effective);
  return g;
}

std::vector<double> population_series(const SimulationLog& log) {
  std::vector<double> p;
  for (const auto& r : log.rows) p.push_back(r.population);
  return p;
}

}  // namespace coevo
