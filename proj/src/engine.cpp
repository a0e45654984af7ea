#include "coevo/engine.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coevo {

int worker_threads() {
  if (const char* env = std::getenv("COEVO_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

AgentState make_agent_state(const AgentSpec& agent, const Topology& topo, StateVec states) {
  if (states.size() != agent.n()) throw ContractViolation("state vector length differs from machine count");
  for (std::size_t v = 0; v < states.size(); ++v)
    if (states[v] < 0 || states[v] >= agent.machines[v].cardinality)
      throw ContractViolation("state symbol out of range for machine " + std::to_string(v));
  AgentState s;
  s.states = std::move(states);
  s.tapes.assign(agent.n(), {});
  reset_inbox(agent, topo, s);
  return s;
}

void reset_inbox(const AgentSpec& agent, const Topology& topo, AgentState& state) {
  state.inbox.resize(agent.n());
  for (std::size_t v = 0; v < agent.n(); ++v) {
    const auto& pa = topo.parents[v];
    state.inbox[v].assign(pa.size(), 0);
    if (agent.inbox_init == InboxInit::parent_state)
      for (std::size_t k = 0; k < pa.size(); ++k) state.inbox[v][k] = mod(state.states[pa[k]], agent.msg_card);
  }
}

TimestepResult assemble_timestep(const AgentSpec& agent, const Topology& topo, const AgentState& state,
                                 std::span<const MachineOutput> outputs) {
  const std::size_t n = agent.n();
  TimestepResult r;
  r.next.states.resize(n);
  r.next.tapes = state.tapes;
  r.emitted.assign(n, 0);
  // Per ledger machine: reply destined for each reading parent.
  std::vector<std::vector<std::pair<std::size_t, Symbol>>> ledger_replies(n);

  for (std::size_t v = 0; v < n; ++v) {
    const MachineSpec& m = agent.machines[v];
    switch (m.role) {
      case MachineRole::generic:
        r.next.states[v] = outputs[v].state;
        r.emitted[v] = outputs[v].message;
        break;
      case MachineRole::resource_store: {
        Symbol avail = state.states[v];
        for (Symbol amount : state.inbox[v]) avail += amount;
        const TransferResult t = apply_resource_transfer(avail, 0, outputs[v].message);
        r.next.states[v] = t.sender;
        r.emitted[v] = t.accepted ? t.receiver : 0;
        if (t.sender >= m.cardinality)
          throw ContractViolation("resource store " + std::to_string(v) + " overflowed its cardinality");
        break;
      }
      case MachineRole::ledger: {
        const std::vector<Symbol>& snapshot = state.tapes[v];
        std::vector<Symbol> tape = snapshot;
        Symbol reads = 0;
        const auto& pa = topo.parents[v];
        for (std::size_t k = 0; k < pa.size(); ++k) {
          const LedgerOp op = decode_ledger_message(state.inbox[v][k], m.ledger);
          if (op.kind == LedgerOp::Kind::write) {
            tape = apply_ledger_message(std::move(tape), state.inbox[v][k], m.ledger).tape;
          } else if (op.kind == LedgerOp::Kind::read) {
            // Reads are answered from the pre-step tape.
            ledger_replies[v].push_back({pa[k], apply_ledger_message(snapshot, state.inbox[v][k], m.ledger).reply});
            ++reads;
          }
        }
        r.next.states[v] = mod(static_cast<Symbol>(tape.size()), m.cardinality);
        r.next.tapes[v] = std::move(tape);
        r.emitted[v] = reads;
        break;
      }
    }
  }

  r.next.inbox.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& pa = topo.parents[c];
    r.next.inbox[c].resize(pa.size());
    for (std::size_t k = 0; k < pa.size(); ++k) {
      const std::size_t v = pa[k];
      if (agent.machines[v].role == MachineRole::ledger) {
        Symbol reply = kLedgerFill;
        for (const auto& [reader, value] : ledger_replies[v])
          if (reader == c) reply = value;
        r.next.inbox[c][k] = reply;
      } else {
        r.next.inbox[c][k] = r.emitted[v];
      }
    }
  }
  return r;
}

TimestepResult run_timestep(const AgentSpec& agent, const Topology& topo, const AgentState& state,
                            std::span<const Symbol> e, std::span<Rng> rngs) {
  const std::size_t n = agent.n();
  if (state.states.size() != n || state.inbox.size() != n) throw ContractViolation("agent state shape mismatch");
  if (rngs.size() < n) throw ContractViolation("one rng stream per machine is required");
  std::vector<MachineOutput> outputs(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (state.inbox[v].size() != topo.parents[v].size()) throw ContractViolation("inbox arity mismatch");
    if (agent.machines[v].role == MachineRole::ledger) continue;
    outputs[v] = step_machine(agent.machines[v], agent.msg_card, state.states[v], e, state.inbox[v], rngs[v]);
  }
  return assemble_timestep(agent, topo, state, outputs);
}

ObservationChannel society_channel(const AgentSpec& society, const AgentSpec& environment) {
  return {society.sigma, environment.cardinalities()};
}

ObservationChannel environment_channel(const AgentSpec& society, const AgentSpec& environment) {
  return {environment.sigma, society.cardinalities()};
}

namespace {

AgentState run_agent(const AgentSpec& agent, const Topology& topo, AgentState state, const ExternalInput& e,
                     const SeedPlan& seeds, std::uint64_t iteration, AgentId id, std::uint64_t replicate,
                     AgentTrace* trace) {
  reset_inbox(agent, topo, state);
  std::vector<Rng> rngs;
  rngs.reserve(agent.n());
  for (std::size_t v = 0; v < agent.n(); ++v)
    rngs.push_back(seeds.stream({iteration, id, static_cast<std::uint32_t>(v), replicate, Purpose::kernel}));
  if (trace) {
    trace->e = e;
    trace->states.push_back(state.states);
  }
  for (std::size_t t = 0; t < agent.tau; ++t) {
    TimestepResult step = run_timestep(agent, topo, state, e, rngs);
    state = std::move(step.next);
    if (trace) {
      trace->states.push_back(state.states);
      trace->messages.push_back(std::move(step.emitted));
    }
  }
  return state;
}

}  // namespace

namespace {

IterationResult iterate(const AgentSpec& society, const AgentSpec& environment, const Topology& ts,
                        const Topology& te, const Boundary& boundary, const SeedPlan& seeds, std::uint64_t iteration,
                        std::uint64_t replicate, bool record_trace) {
  IterationResult out;
  out.trace.index = iteration;
  Rng ch_s = seeds.stream({iteration, AgentId::society, 0, replicate, Purpose::channel});
  Rng ch_e = seeds.stream({iteration, AgentId::environment, 0, replicate, Purpose::channel});
  const ExternalInput e_s = observe(boundary.environment.states, society_channel(society, environment), ch_s);
  const ExternalInput e_e = observe(boundary.society.states, environment_channel(society, environment), ch_e);

  out.end.society = run_agent(society, ts, boundary.society, e_s, seeds, iteration, AgentId::society, replicate,
                              record_trace ? &out.trace.society : nullptr);
  out.end.environment = run_agent(environment, te, boundary.environment, e_e, seeds, iteration,
                                  AgentId::environment, replicate, record_trace ? &out.trace.environment : nullptr);
  out.trace.society_end = out.end.society.states;
  out.trace.environment_end = out.end.environment.states;
  if (!record_trace) {
    out.trace.society.e = e_s;
    out.trace.environment.e = e_e;
  }
  return out;
}

}  // namespace

IterationResult run_iteration(const AgentSpec& society, const AgentSpec& environment, const Boundary& boundary,
                              const SeedPlan& seeds, std::uint64_t iteration, std::uint64_t replicate,
                              bool record_trace) {
  return iterate(society, environment, topology(society.graph), topology(environment.graph), boundary, seeds,
                 iteration, replicate, record_trace);
}

std::uint64_t JointCounts::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, c] : counts) t += c;
  return t;
}

void check_flattening_limit(const AgentSpec& society, const AgentSpec& environment, std::size_t limit) {
  const auto cs = society.cardinalities();
  const auto ce = environment.cardinalities();
  const std::size_t s = joint_size(cs);
  const std::size_t e = joint_size(ce);
  std::size_t product = 0;
  const bool overflow = __builtin_mul_overflow(s, e, &product);
  if (overflow || product > limit)
    throw ContractViolation("flattened joint state space " + (overflow ? std::string("(overflow)") : std::to_string(s * e)) +
                            " exceeds the configured limit " + std::to_string(limit));
}

namespace {

StateVec uniform_state(const AgentSpec& agent, Rng& rng) {
  StateVec s(agent.n());
  for (std::size_t v = 0; v < agent.n(); ++v)
    s[v] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(agent.machines[v].cardinality)));
  return s;
}

std::pair<std::size_t, std::size_t> rollout_one(const AgentSpec& society, const AgentSpec& environment,
                                                const BoundaryModel& model, const SeedPlan& seeds,
                                                const Topology& ts, const Topology& te, std::uint64_t r) {
  Boundary b;
  if (model.kind == BoundaryModel::Kind::point) {
    b.society = make_agent_state(society, ts, model.society_point);
    b.environment = make_agent_state(environment, te, model.environment_point);
  } else {
    Rng rng = seeds.stream({0, AgentId::society, 0, r, Purpose::boundary});
    b.society = make_agent_state(society, ts, uniform_state(society, rng));
    b.environment = make_agent_state(environment, te, uniform_state(environment, rng));
    if (model.kind == BoundaryModel::Kind::warmup)
      b = iterate(society, environment, ts, te, b, seeds.child(1), 0, r, false).end;
  }
  const IterationResult h = iterate(society, environment, ts, te, b, seeds.child(2), 0, r, false);
  const auto cs = society.cardinalities();
  const auto ce = environment.cardinalities();
  return {flatten(b.society.states, cs), flatten(h.end.environment.states, ce)};
}

JointCounts rollout_counts(const AgentSpec& society, const AgentSpec& environment,
                           const std::vector<std::pair<std::size_t, std::size_t>>& samples) {
  JointCounts jc;
  jc.society_size = joint_size(society.cardinalities());
  jc.environment_size = joint_size(environment.cardinalities());
  for (const auto& s : samples) ++jc.counts[s];
  return jc;
}

}  // namespace

JointCounts ensemble_rollout(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                             const SeedPlan& seeds, std::uint64_t replicates, std::size_t limit) {
  if (replicates < 1) throw ContractViolation("ensemble_rollout needs R >= 1");
  check_flattening_limit(society, environment, limit);
  const Topology ts = topology(society.graph);
  const Topology te = topology(environment.graph);
  std::vector<std::pair<std::size_t, std::size_t>> samples(replicates);
  const auto count = static_cast<std::int64_t>(replicates);
  // Exceptions cannot cross the parallel region; remember the first one.
  std::string error;
#pragma omp parallel for schedule(static) num_threads(worker_threads())
  for (std::int64_t r = 0; r < count; ++r) {
    try {
      samples[static_cast<std::size_t>(r)] =
          rollout_one(society, environment, model, seeds, ts, te, static_cast<std::uint64_t>(r));
    } catch (const std::exception& ex) {
#pragma omp critical(coevo_rollout_error)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw ContractViolation(error);
  return rollout_counts(society, environment, samples);
}

JointCounts ensemble_rollout_serial(const AgentSpec& society, const AgentSpec& environment,
                                    const BoundaryModel& model, const SeedPlan& seeds, std::uint64_t replicates,
                                    std::size_t limit) {
  if (replicates < 1) throw ContractViolation("ensemble_rollout needs R >= 1");
  check_flattening_limit(society, environment, limit);
  const Topology ts = topology(society.graph);
  const Topology te = topology(environment.graph);
  std::vector<std::pair<std::size_t, std::size_t>> samples;
  samples.reserve(replicates);
  for (std::uint64_t r = 0; r < replicates; ++r)
    samples.push_back(rollout_one(society, environment, model, seeds, ts, te, r));
  return rollout_counts(society, environment, samples);
}

// Exact propagation ------------------------------------------------------------

namespace {

bool has_kernel(const AgentSpec& agent) {
  return std::any_of(agent.machines.begin(), agent.machines.end(), [](const MachineSpec& m) {
    return m.role != MachineRole::ledger && std::holds_alternative<KernelRule>(m.rule);
  });
}

struct StateLess {
  bool operator()(const AgentState& a, const AgentState& b) const {
    if (a.states != b.states) return a.states < b.states;
    if (a.inbox != b.inbox) return a.inbox < b.inbox;
    return a.tapes < b.tapes;
  }
};

}  // namespace

SparseDist propagate_exact(const AgentSpec& agent, const Topology& topo, const StateVec& start,
                           std::span<const Symbol> e) {
  const auto cards = agent.cardinalities();
  AgentState s0 = make_agent_state(agent, topo, start);
  if (!has_kernel(agent)) {
    std::vector<Rng> dummy(agent.n());
    for (std::size_t t = 0; t < agent.tau; ++t) s0 = run_timestep(agent, topo, s0, e, dummy).next;
    return {{flatten(s0.states, cards), 1.0}};
  }

  const std::size_t n = agent.n();
  std::map<AgentState, double, StateLess> current{{std::move(s0), 1.0}};
  Rng dummy_rng;
  for (std::size_t t = 0; t < agent.tau; ++t) {
    std::map<AgentState, double, StateLess> next;
    for (const auto& [state, p] : current) {
      std::vector<std::vector<KernelBranch>> options(n);
      for (std::size_t v = 0; v < n; ++v) {
        const MachineSpec& m = agent.machines[v];
        if (m.role == MachineRole::ledger) {
          options[v] = {{1.0, {}}};
        } else if (const auto* k = std::get_if<KernelRule>(&m.rule)) {
          const auto& row = k->rows.at(k->domain.index(state.states[v], e, state.inbox[v]));
          for (const auto& br : row)
            if (br.prob > 0.0) options[v].push_back(br);
        } else {
          options[v] = {{1.0, step_machine(m, agent.msg_card, state.states[v], e, state.inbox[v], dummy_rng)}};
        }
      }
      std::vector<std::size_t> pick(n, 0);
      std::vector<MachineOutput> outs(n);
      while (true) {
        double q = p;
        for (std::size_t v = 0; v < n; ++v) {
          q *= options[v][pick[v]].prob;
          outs[v] = options[v][pick[v]].out;
        }
        next[assemble_timestep(agent, topo, state, outs).next] += q;
        std::size_t v = 0;
        while (v < n && ++pick[v] == options[v].size()) pick[v++] = 0;
        if (v == n) break;
      }
    }
    current = std::move(next);
  }
  std::map<std::size_t, double> by_index;
  for (const auto& [state, p] : current) by_index[flatten(state.states, cards)] += p;
  return SparseDist(by_index.begin(), by_index.end());
}

namespace {

PropagationTable empty_table(const AgentSpec& agent) {
  PropagationTable t;
  t.state_size = joint_size(agent.cardinalities());
  t.input_size = joint_size(agent.external_cards);
  t.entries.resize(t.state_size * t.input_size);
  return t;
}

SparseDist table_entry(const AgentSpec& agent, const Topology& topo, std::size_t i, std::size_t input_size) {
  const auto cards = agent.cardinalities();
  const StateVec x = unflatten(i / input_size, cards);
  const StateVec e = unflatten(i % input_size, agent.external_cards);
  return propagate_exact(agent, topo, x, e);
}

}  // namespace

PropagationTable propagation_table(const AgentSpec& agent) {
  PropagationTable t = empty_table(agent);
  const Topology topo = topology(agent.graph);
  const auto total = static_cast<std::int64_t>(t.entries.size());
  std::string error;
#pragma omp parallel for schedule(dynamic, 16) num_threads(worker_threads())
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      t.entries[static_cast<std::size_t>(i)] = table_entry(agent, topo, static_cast<std::size_t>(i), t.input_size);
    } catch (const std::exception& ex) {
#pragma omp critical(coevo_table_error)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw ContractViolation(error);
  return t;
}

PropagationTable propagation_table_serial(const AgentSpec& agent) {
  PropagationTable t = empty_table(agent);
  const Topology topo = topology(agent.graph);
  for (std::size_t i = 0; i < t.entries.size(); ++i) t.entries[i] = table_entry(agent, topo, i, t.input_size);
  return t;
}

}  // namespace coevo
