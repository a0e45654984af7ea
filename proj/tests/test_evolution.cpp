#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "coevo/channel.hpp"
#include "coevo/engine.hpp"
#include "coevo/evolution.hpp"
#include "support.hpp"

using namespace coevo;
using namespace coevo::test;

namespace {

EvolutionPolicy identity_policy(AllocationDistribution rho) {
  EvolutionPolicy p;
  p.allocation = rho;
  return p;
}

ComputationParams some_params() {
  ComputationParams c;
  c.tau = 3;
  c.msg_card = 4;
  c.n_machines = 5;
  c.state_card = 3;
  c.r_society = 7.5;
  c.r_environment = 2.0;
  c.fan_out = 2;
  return c;
}

// Two generic machines with a random table rule over binary states and messages.
AgentSpec binary_table_agent(Rng& gen) {
  AgentSpec a;
  a.msg_card = 2;
  a.external_cards = {2};
  a.graph = {2, {{0, 1}, {1, 0}}, 1};
  for (int v = 0; v < 2; ++v) {
    MachineSpec m;
    m.cardinality = 2;
    m.rule = make_table(RuleDomain{2, {0}, {2}, 2, 1}, [&](const RuleDomain::Key&) {
      return std::optional<MachineOutput>(
          MachineOutput{static_cast<Symbol>(gen.below(2)), static_cast<Symbol>(gen.below(2))});
    });
    a.machines.push_back(m);
  }
  return a;
}

std::vector<StateVec> trajectory(const AgentSpec& a, StateVec start, const std::vector<Symbol>& inputs) {
  const Topology topo = topology(a.graph);
  AgentState s = make_agent_state(a, topo, std::move(start));
  auto rngs = streams(a.n());
  std::vector<StateVec> out;
  for (Symbol e : inputs) {
    const std::vector<Symbol> ev{e};
    s = run_timestep(a, topo, s, ev, rngs).next;
    out.push_back(s.states);
  }
  return out;
}

}  // namespace

TEST_CASE("cost examples") {
  const CostFunction id;
  CHECK(id.cost(5) == 5);
  CHECK(id.invert(5).value == 5);
  const CostFunction sq{CostFunction::Family::power, 0.5, 1, 1};
  CHECK(sq.invert(3).value == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(sq.cost(9) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("cost functions invert exactly and increase strictly") {
  Rng gen(1);
  const std::vector<CostFunction> families{
      CostFunction{},
      CostFunction{CostFunction::Family::power, 0.5, 1, 1},
      CostFunction{CostFunction::Family::power, 0.3, 1, 1},
      CostFunction{CostFunction::Family::logit, 1, 4.0, 20.0},
  };
  for (const CostFunction& c : families) {
    const double top = c.family == CostFunction::Family::logit ? c.ceiling * 0.999 : 100.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = gen.uniform() * top;
      const CostInverse inv = c.invert(x);
      REQUIRE_FALSE(inv.clamped);
      CHECK(std::abs(c.cost(inv.value) - x) <= 1e-12);
      const double z = gen.uniform() * 50.0;
      CHECK(c.cost(z + 0.01) > c.cost(z));
    }
    CHECK(c.cost(0) == 0.0);
  }
}

TEST_CASE("logit energy at the ceiling is clamped and flagged") {
  const CostFunction c{CostFunction::Family::logit, 1, 1.0, 2.0};
  const CostInverse inv = c.invert(5.0);
  CHECK(inv.clamped);
  CHECK(std::isfinite(inv.value));
  CHECK(inv.spent < 2.0);
}

TEST_CASE("uniform split of seven units gives unit parameters") {
  const EvolutionOutcome o = evolve_parameters(some_params(), 7.0, identity_policy(AllocationDistribution::uniform()));
  CHECK(o.params.tau == 1);
  CHECK(o.params.msg_card == 1);
  CHECK(o.params.n_machines == 1);
  CHECK(o.params.state_card == 1);
  CHECK(o.params.fan_out == 1);
  CHECK(o.params.r_society == doctest::Approx(1.0));
  CHECK(o.params.r_environment == doctest::Approx(1.0));
}

TEST_CASE("zero harvest drops everything to its floor") {
  EvolutionPolicy p = identity_policy(AllocationDistribution::uniform());
  p.bounds[slot(ParamKind::state_card)].floor = 2;
  p.bounds[slot(ParamKind::msg_card)].floor = 3;
  const EvolutionOutcome o = evolve_parameters(some_params(), 0.0, p);
  CHECK(o.params.tau == 1);
  CHECK(o.params.msg_card == 3);
  CHECK(o.params.n_machines == 1);
  CHECK(o.params.state_card == 2);
  CHECK(o.params.fan_out == 1);
  CHECK(o.params.r_society == 1.0);
  CHECK(o.params.r_environment == 1.0);
}

TEST_CASE("allocation concentrated on the machine count") {
  const EvolutionOutcome o =
      evolve_parameters(some_params(), 12.0, identity_policy(AllocationDistribution::concentrated(ParamKind::n_machines)));
  CHECK(o.params.n_machines == 12);
  CHECK(o.params.tau == 1);
  CHECK(o.params.msg_card == 1);
  CHECK(o.params.state_card == 1);
  CHECK(o.params.fan_out == 1);
  CHECK(o.params.r_society == 1.0);
  CHECK(o.params.r_environment == 1.0);
}

TEST_CASE("the budget is spent exactly before rounding") {
  Rng gen(2);
  for (int trial = 0; trial < 2000; ++trial) {
    EvolutionPolicy p;
    std::vector<double> logits(kParamCount);
    for (auto& l : logits) l = gen.uniform() * 6 - 3;
    p.allocation = allocation_from_logits(logits);
    REQUIRE(p.allocation.valid());
    for (auto& c : p.costs) {
      const auto pick = gen.below(3);
      if (pick == 1) c = CostFunction{CostFunction::Family::power, 0.2 + 0.8 * gen.uniform(), 1, 1};
      if (pick == 2) c = CostFunction{CostFunction::Family::logit, 1, 0.5 + gen.uniform(), 5 + 20 * gen.uniform()};
    }
    p.kappa = 0.5 + gen.uniform() * 3;
    const double gfer = gen.uniform() * 30;
    const EvolutionOutcome o = evolve_parameters(some_params(), gfer, p);
    double spent = 0.0;
    for (ParamKind k : kAllParams) {
      const std::size_t i = slot(k);
      spent += p.costs[i].cost(o.raw[i]);
      CHECK(o.params.get(k) >= p.bounds[i].floor);
      CHECK(o.params.get(k) <= p.bounds[i].ceiling);
    }
    CHECK(std::abs(spent + o.clamp_discard - p.kappa * gfer) <= 1e-9);
    if (!o.clamped) CHECK(std::abs(spent - p.kappa * gfer) <= 1e-9);
  }
}

TEST_CASE("evolution only touches the environment's noise and input alphabet") {
  Rng gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    AgentSpec env = random_agent(2, 3, 2, {2, 2}, gen);
    AgentSpec soc = random_agent(2, 2, 2, env.cardinalities(), gen);
    EvolutionPolicy policy;
    ComputationParams params = extract_params(soc, env, policy.r_max);
    const bool reshape = trial % 2 == 1;
    if (reshape) {
      params.n_machines = 2 + gen.below(3);
      params.state_card = 2 + gen.below(2);
    }
    params.r_environment = 1.0 + gen.uniform() * 9;
    params.r_society = 1.0 + gen.uniform() * 9;
    GrowthState gs;
    const AppliedParams ap = apply_params(soc, env, params, policy, gen, gs);
    const AgentSpec& e2 = ap.environment;
    CHECK(e2.sigma == sigma_from_precision(params.r_environment, policy.r_max));
    CHECK(e2.cardinalities() == env.cardinalities());
    CHECK(e2.graph.edges == env.graph.edges);
    CHECK(e2.graph.fan_out_cap == env.graph.fan_out_cap);
    CHECK(e2.tau == env.tau);
    CHECK(e2.msg_card == env.msg_card);
    CHECK(e2.external_cards == ap.society.cardinalities());
    if (!reshape) {
      const PropagationTable a = propagation_table(env), b = propagation_table(e2);
      CHECK(a.entries == b.entries);
    }
  }
}

TEST_CASE("unchanged machine count leaves the agent alone") {
  Rng gen(4);
  const AgentSpec a = random_agent(3, 2, 2, {2}, gen);
  GrowthState gs;
  const GrowResult r = grow_machines(a, 3, GrowthPolicy{}, gen, gs);
  CHECK(r.added == 0);
  CHECK(r.agent.graph.edges == a.graph.edges);
  CHECK(propagation_table(r.agent).entries == propagation_table(a).entries);
}

TEST_CASE("guttman templates unlock in order by best harvest") {
  GrowthPolicy policy;
  policy.guttman = {{"fire", 0, 0}, {"agriculture", 5, 0}, {"metallurgy", 50, 0}};
  Rng gen(5);
  AgentSpec a = binary_identity();
  a.graph.fan_out_cap = 8;
  GrowthState gs;
  gs.gfer_max = 10;
  const GrowResult r = grow_machines(a, 10, policy, gen, gs);
  CHECK(r.stalled);
  CHECK(r.added == 2);
  REQUIRE(r.agent.n() == 3);
  CHECK(r.agent.machines[1].label == "fire");
  CHECK(r.agent.machines[2].label == "agriculture");

  // Once the harvest record passes the last threshold, the final template follows.
  gs.gfer_max = 60;
  const GrowResult more = grow_machines(r.agent, 10, policy, gen, gs);
  CHECK(more.added == 1);
  CHECK(more.agent.machines[3].label == "metallurgy");
}

TEST_CASE("growth honours the fan-out cap") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng gen(seed);
    AgentSpec a = random_agent(2, 2, 2, {2}, gen);
    a = set_fan_out_cap(a, 3);
    GrowthState gs;
    const GrowResult r = grow_machines(a, 50, GrowthPolicy{}, gen, gs);
    REQUIRE(r.agent.n() == 50);
    std::vector<std::size_t> deg(50, 0);
    for (const Edge& e : r.agent.graph.edges) ++deg[e.from];
    CHECK(*std::max_element(deg.begin(), deg.end()) <= 3);
    CHECK(validate_agent(r.agent).ok());
  }
}

TEST_CASE("growth without spare fan-out fails when connectivity is required") {
  Rng gen(6);
  AgentSpec a = binary_identity();
  a.graph.fan_out_cap = 0;
  GrowthState gs;
  CHECK_THROWS_AS(grow_machines(a, 3, GrowthPolicy{}, gen, gs), ValidationFailure);
  GrowthPolicy loose;
  loose.require_connected = false;
  CHECK(grow_machines(a, 3, loose, gen, gs).agent.n() == 3);
}

TEST_CASE("resizing to the same sizes keeps behaviour") {
  Rng gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const AgentSpec a = random_agent(3, 3, 2, {2}, gen);
    const AgentSpec b = resize_state_and_message_spaces(a, 3, 2);
    CHECK(propagation_table(a).entries == propagation_table(b).entries);
  }
}

TEST_CASE("growing the alphabets preserves trajectories on old symbols") {
  Rng gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const AgentSpec a = binary_table_agent(gen);
    const AgentSpec b = resize_state_and_message_spaces(a, 4, 4);
    REQUIRE(validate_agent(b).ok());
    std::vector<Symbol> inputs(20);
    for (auto& e : inputs) e = static_cast<Symbol>(gen.below(2));
    const StateVec start{static_cast<Symbol>(gen.below(2)), static_cast<Symbol>(gen.below(2))};
    CHECK(trajectory(a, start, inputs) == trajectory(b, start, inputs));
  }
}

TEST_CASE("shrinking keeps states inside the new alphabet") {
  Rng gen(9);
  for (int trial = 0; trial < 100; ++trial) {
    const AgentSpec a = random_agent(3, 4, 3, {2}, gen);
    const AgentSpec b = resize_state_and_message_spaces(a, 2, 2);
    REQUIRE(validate_agent(b).ok());
    std::vector<Symbol> inputs(15);
    for (auto& e : inputs) e = static_cast<Symbol>(gen.below(2));
    StateVec start(3);
    for (auto& x : start) x = static_cast<Symbol>(gen.below(2));
    for (const StateVec& s : trajectory(b, start, inputs))
      for (Symbol x : s) CHECK(x < 2);
  }
}
