#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "coevo/channel.hpp"
#include "coevo/core.hpp"
#include "coevo/rng.hpp"

namespace coevo {

/// Runtime state of one agent between timesteps.
struct AgentState {
  StateVec states;
  /// inbox[v][k] holds the message from the k-th parent of v (parents ascending).
  std::vector<std::vector<Symbol>> inbox;
  /// Ledger tapes; empty for every non-ledger machine.
  std::vector<std::vector<Symbol>> tapes;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

AgentState make_agent_state(const AgentSpec& agent, const Topology& topo, StateVec states);
/// Re-initialises the inbox buffers per the agent's InboxInit policy.
void reset_inbox(const AgentSpec& agent, const Topology& topo, AgentState& state);

struct TimestepResult {
  AgentState next;
  /// Broadcast message of each machine (for a ledger: the number of reads served).
  std::vector<Symbol> emitted;
};

/// One synchronous timestep: every machine reads the same pre-step snapshot.
/// rngs holds one stream per machine; only kernel rules consume them.
TimestepResult run_timestep(const AgentSpec& agent, const Topology& topo, const AgentState& state,
                            std::span<const Symbol> e, std::span<Rng> rngs);

/// Applies role semantics (resource stores, ledgers) to per-machine rule outputs
/// and routes messages into the next inbox buffers. Entries of `outputs` for
/// ledger machines are ignored.
TimestepResult assemble_timestep(const AgentSpec& agent, const Topology& topo, const AgentState& state,
                                 std::span<const MachineOutput> outputs);

struct Boundary {
  AgentState society;
  AgentState environment;
};

struct AgentTrace {
  ExternalInput e;
  /// tau + 1 joint states, index 0 = iteration start.
  std::vector<StateVec> states;
  /// tau broadcast vectors.
  std::vector<std::vector<Symbol>> messages;
};

struct IterationTrace {
  std::uint64_t index = 0;
  AgentTrace society;
  AgentTrace environment;
  StateVec society_end;
  StateVec environment_end;
  double gfer = 0.0;
};

struct IterationResult {
  IterationTrace trace;
  Boundary end;
};

ObservationChannel society_channel(const AgentSpec& society, const AgentSpec& environment);
ObservationChannel environment_channel(const AgentSpec& society, const AgentSpec& environment);

/// One iteration of the two-agent loop: both agents observe the other's
/// boundary state through their channel, then run tau timesteps each with the
/// external input frozen.
IterationResult run_iteration(const AgentSpec& society, const AgentSpec& environment, const Boundary& boundary,
                              const SeedPlan& seeds, std::uint64_t iteration, std::uint64_t replicate = 0,
                              bool record_trace = true);

/// Distribution of the iteration-start boundary used by the harvest.
struct BoundaryModel {
  enum class Kind { point, uniform, warmup };
  Kind kind = Kind::warmup;
  StateVec society_point;
  StateVec environment_point;
};

inline constexpr std::size_t kDefaultFlatteningLimit = std::size_t{1} << 20;

/// Empirical joint over (flattened X^S_0, flattened X^E_tau).
struct JointCounts {
  std::size_t society_size = 0;
  std::size_t environment_size = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> counts;
  std::uint64_t total() const;
};

/// R independent replays of the harvest iteration with the boundary drawn from
/// `model`. OpenMP-parallel over replicates; merge order is replicate order, so
/// the result does not depend on the thread count.
JointCounts ensemble_rollout(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                             const SeedPlan& seeds, std::uint64_t replicates,
                             std::size_t limit = kDefaultFlatteningLimit);
/// Single-threaded reference for ensemble_rollout.
JointCounts ensemble_rollout_serial(const AgentSpec& society, const AgentSpec& environment,
                                    const BoundaryModel& model, const SeedPlan& seeds, std::uint64_t replicates,
                                    std::size_t limit = kDefaultFlatteningLimit);

/// Throws ContractViolation naming the required size when the flattened
/// society x environment space exceeds `limit`.
void check_flattening_limit(const AgentSpec& society, const AgentSpec& environment, std::size_t limit);

// Exact propagation -----------------------------------------------------------

/// Sparse distribution over flattened joint states, sorted by index.
using SparseDist = std::vector<std::pair<std::size_t, double>>;

/// Exact distribution of the agent's joint state after `tau` timesteps from a
/// fresh iteration start (`start` states, reset inbox, empty tapes) under a
/// fixed external input, enumerating every kernel branch.
SparseDist propagate_exact(const AgentSpec& agent, const Topology& topo, const StateVec& start,
                           std::span<const Symbol> e);

/// propagate_exact for every (start state, external input) pair, indexed
/// [x * |E| + e]. OpenMP-parallel; `propagation_table_serial` is the reference.
struct PropagationTable {
  std::size_t state_size = 0;
  std::size_t input_size = 0;
  std::vector<SparseDist> entries;
  const SparseDist& at(std::size_t x, std::size_t e) const { return entries[x * input_size + e]; }
};
PropagationTable propagation_table(const AgentSpec& agent);
PropagationTable propagation_table_serial(const AgentSpec& agent);

/// Worker count: COEVO_THREADS if set, else the OpenMP default.
int worker_threads();

}  // namespace coevo
