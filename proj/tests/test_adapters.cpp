#include <doctest.h>

#include <array>
#include <cmath>

#include "coevo/adapters.hpp"
#include "coevo/engine.hpp"
#include "support.hpp"

using namespace coevo;
using namespace coevo::test;

namespace {

// Direct array-based elementary CA on a periodic ring.
std::vector<Symbol> ca_reference_step(int rule, const std::vector<Symbol>& cells) {
  const std::size_t w = cells.size();
  std::vector<Symbol> next(w);
  for (std::size_t i = 0; i < w; ++i) {
    const int idx = cells[(i + w - 1) % w] * 4 + cells[i] * 2 + cells[(i + 1) % w];
    next[i] = (rule >> idx) & 1;
  }
  return next;
}

struct Runner {
  AgentSpec agent;
  Topology topo;
  AgentState state;
  std::vector<Rng> rngs;

  Runner(AgentSpec a, StateVec start, std::uint64_t seed = 0)
      : agent(std::move(a)), topo(topology(agent.graph)), rngs(streams(agent.n(), seed)) {
    state = make_agent_state(agent, topo, std::move(start));
  }
  TimestepResult step(std::span<const Symbol> e = {}) {
    TimestepResult r = run_timestep(agent, topo, state, e, rngs);
    state = r.next;
    return r;
  }
};

MealyMachine parity_machine(std::vector<std::size_t> parents = {}) {
  MealyMachine m;
  m.states = 2;
  m.parents = std::move(parents);
  m.step = [](Symbol q, Symbol bit, std::span<const Symbol> inbox) {
    Symbol p = q ^ bit;
    for (Symbol s : inbox) p ^= s;
    return MachineOutput{p, p};
  };
  return m;
}

}  // namespace

TEST_CASE("rule 110 matches the direct automaton bit for bit") {
  const std::size_t w = 64;
  std::vector<Symbol> cells(w, 0);
  cells[w / 2] = 1;
  Runner run(ca_to_mcm(110, w), cells);
  REQUIRE(validate_agent(run.agent).ok());
  for (int t = 0; t < 100; ++t) {
    cells = ca_reference_step(110, cells);
    const TimestepResult r = run.step();
    REQUIRE(r.next.states == cells);
    REQUIRE(r.emitted == cells);
  }
}

TEST_CASE("rules 0 and 204 have forced behaviour") {
  Rng gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 3 + gen.below(30);
    StateVec start(w);
    for (auto& x : start) x = static_cast<Symbol>(gen.below(2));
    Runner zero(ca_to_mcm(0, w), start);
    CHECK(zero.step().next.states == StateVec(w, 0));
    Runner ident(ca_to_mcm(204, w), start);
    for (int t = 0; t < 5; ++t) CHECK(ident.step().next.states == start);
  }
  CHECK_THROWS_AS(ca_to_mcm(256, 8), ValidationFailure);
  CHECK_THROWS_AS(ca_to_mcm(30, 2), ValidationFailure);
}

TEST_CASE("random elementary rules agree with the reference") {
  Rng gen(2);
  for (int rule = 0; rule < 256; ++rule) {
    const std::size_t w = 3 + gen.below(12);
    std::vector<Symbol> cells(w);
    for (auto& x : cells) x = static_cast<Symbol>(gen.below(2));
    Runner run(ca_to_mcm(rule, w), cells);
    for (int t = 0; t < 10; ++t) {
      cells = ca_reference_step(rule, cells);
      CHECK(run.step().next.states == cells);
    }
  }
}

TEST_CASE("constant-output mealy machine") {
  MealyMachine m;
  m.states = 3;
  m.step = [](Symbol q, Symbol bit, std::span<const Symbol>) { return MachineOutput{static_cast<Symbol>(q + bit), 1}; };
  const MealyNetwork net{{m}, 2, 4};
  Runner run(mealy_mcm(net, 4), {0});
  REQUIRE(validate_agent(run.agent).ok());
  const std::vector<Symbol> e{1, 0, 1, 1};
  for (int t = 0; t < 12; ++t) CHECK(run.step(e).emitted == std::vector<Symbol>{1});
}

TEST_CASE("parity accumulator over 101101") {
  const MealyNetwork net{{parity_machine()}, 2, 6};
  Runner run(mealy_mcm(net, 6), {mealy_state(0, 0, 6)});
  const std::vector<Symbol> e{1, 0, 1, 1, 0, 1};
  for (int t = 0; t < 6; ++t) run.step(e);
  CHECK(mealy_control(run.state.states[0], 6) == 0);
  CHECK(mealy_counter(run.state.states[0], 6) == 0);
}

TEST_CASE("communicating parity machines match the product automaton") {
  Rng gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = 1 + gen.below(8);
    std::vector<Symbol> e(L);
    for (auto& b : e) b = static_cast<Symbol>(gen.below(2));
    const MealyNetwork net{{parity_machine({1}), parity_machine({0})}, 2, L};
    Runner run(mealy_mcm(net, L), {0, 0});
    REQUIRE(validate_agent(run.agent).ok());
    // Product automaton over (qa, qb, counter, last outputs).
    Symbol qa = 0, qb = 0, ma = 0, mb = 0;
    std::size_t n = 0;
    for (int t = 0; t < 50; ++t) {
      const Symbol na = qa ^ e[n] ^ mb, nb = qb ^ e[n] ^ ma;
      qa = na, qb = nb, ma = na, mb = nb;
      n = (n + 1) % L;
      const TimestepResult r = run.step(e);
      REQUIRE(r.emitted == std::vector<Symbol>{ma, mb});
      REQUIRE(mealy_control(r.next.states[0], L) == qa);
      REQUIRE(mealy_control(r.next.states[1], L) == qb);
      REQUIRE(mealy_counter(r.next.states[0], L) == n);
    }
  }
}

TEST_CASE("mealy counters must not wrap inside an iteration") {
  const MealyNetwork net{{parity_machine()}, 2, 3};
  CHECK_NOTHROW(mealy_mcm(net, 3));
  CHECK_THROWS_AS(mealy_mcm(net, 4), ValidationFailure);
}

TEST_CASE("infinite temperature flips half the time") {
  const std::vector<double> J{0, 1, 1, 0};
  GlauberOptions opt;
  opt.beta = 0.0;
  Runner run(glauber_mcm(J, 2, opt), {0, 1}, 4);
  REQUIRE(validate_agent(run.agent).ok());
  int flips = 0;
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    const Symbol before = run.state.states[0];
    flips += run.step().next.states[0] != before;
  }
  CHECK(std::abs(flips / double(steps) - 0.5) <= 0.01);
}

TEST_CASE("single spin magnetisation follows tanh") {
  const std::array<std::pair<double, double>, 3> cases{{{0.5, 0.5}, {1.0, 0.3}, {0.8, -0.6}}};
  std::uint64_t seed = 10;
  for (const auto& [beta, h] : cases) {
    GlauberOptions opt;
    opt.beta = beta;
    opt.field = {h};
    Runner run(glauber_mcm(std::vector<double>{0.0}, 1, opt), {0}, seed++);
    double m = 0.0;
    const int steps = 100000;
    for (int t = 0; t < steps; ++t) m += spin(run.step().next.states[0]);
    CHECK(std::abs(m / steps - std::tanh(beta * h)) <= 0.02);
  }
}

TEST_CASE("two ferromagnetic spins follow the hand-built four-state chain") {
  const double beta = 2.0;
  const std::vector<double> J{0, 1, 1, 0};
  GlauberOptions opt;
  opt.beta = beta;
  // Synchronous update: each spin flips independently given the other's old value.
  auto flip = [&](Symbol self, Symbol other) { return 1.0 / (1.0 + std::exp(2.0 * beta * spin(self) * spin(other))); };
  double P[4][4] = {};
  for (Symbol a = 0; a < 2; ++a)
    for (Symbol b = 0; b < 2; ++b)
      for (Symbol a2 = 0; a2 < 2; ++a2)
        for (Symbol b2 = 0; b2 < 2; ++b2) {
          const double pa = a2 != a ? flip(a, b) : 1 - flip(a, b);
          const double pb = b2 != b ? flip(b, a) : 1 - flip(b, a);
          P[a * 2 + b][a2 * 2 + b2] = pa * pb;
        }
  std::array<double, 4> pi{1, 0, 0, 0};
  for (int it = 0; it < 10000; ++it) {
    std::array<double, 4> next{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) next[j] += pi[i] * P[i][j];
    pi = next;
  }
  // Aligned pairs leak into the anti-aligned oscillation, so nothing is absorbing.
  CHECK(P[0][0] < 1.0 - 1e-3);
  CHECK(pi[0] + pi[3] == doctest::Approx(0.5).epsilon(1e-9));

  Runner run(glauber_mcm(J, 2, opt), {1, 1}, 21);
  std::array<double, 4> occupancy{};
  std::array<double, 4> visits{}, stays{};
  const int steps = 200000;
  for (int t = 0; t < steps; ++t) {
    const std::size_t from = run.state.states[0] * 2 + run.state.states[1];
    const std::size_t to = run.step().next.states[0] * 2 + run.state.states[1];
    occupancy[to] += 1.0 / steps;
    visits[from] += 1;
    stays[from] += from == to;
  }
  for (int s = 0; s < 4; ++s) {
    CHECK(std::abs(occupancy[s] - pi[s]) <= 0.02);
    CHECK(std::abs(stays[s] / visits[s] - P[s][s]) <= 0.01);
  }
}

TEST_CASE("glauber couplings must be symmetric with a zero diagonal") {
  GlauberOptions opt;
  CHECK_THROWS_AS(glauber_mcm(std::vector<double>{0, 1, 0.5, 0}, 2, opt), ValidationFailure);
  CHECK_THROWS_AS(glauber_mcm(std::vector<double>{1, 0, 0, 0}, 2, opt), ValidationFailure);
  CHECK(validate_agent(glauber_mcm(std::vector<double>{0, -1, -1, 0}, 2, opt)).ok());
}
