#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "coevo/evolution.hpp"
#include "coevo/simulation.hpp"

namespace coevo {

/// Which parts of an agent a PolicyEncoding covers. Generic machines with
/// linear-ring rules are encoded; every other machine keeps its rule.
struct EncodingLayout {
  struct Slot {
    std::size_t machine = 0;
    /// Offset of the state map (a, b..., c..., d) then the message map.
    std::size_t offset = 0;
    Symbol state_modulus = 1;
    Symbol msg_modulus = 1;
    std::size_t n_external = 0;
    std::size_t n_parent_slots = 0;
  };
  std::vector<Slot> slots;
  std::size_t ring_size = 0;
  bool with_rho = false;
  bool with_edges = false;
  /// Candidate edges (u, v) toggled by edge bits; empty when the graph is fixed.
  std::vector<Edge> edge_candidates;
  /// Edges kept regardless of the bits (those touching frozen machines).
  std::vector<Edge> fixed_edges;

  std::size_t dimension() const;
};

/// Ring coefficients, allocation logits and edge bits. With edge bits on,
/// every machine carries a message coefficient for each potential parent and
/// only the coefficients of present edges are used.
struct PolicyEncoding {
  std::vector<Symbol> ring;
  std::vector<double> logits;
  std::vector<std::uint8_t> edges;
  friend bool operator==(const PolicyEncoding&, const PolicyEncoding&) = default;
};

EncodingLayout make_layout(const AgentSpec& agent, bool with_rho, bool with_edges);
PolicyEncoding encode(const EncodingLayout& layout, const AgentSpec& agent, const AllocationDistribution* rho);

struct DecodedPolicy {
  AgentSpec agent;
  AllocationDistribution rho;
};
/// Throws ValidationFailure when the decoded agent is invalid (e.g. fan-out).
DecodedPolicy decode(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x);

PolicyEncoding random_encoding(const EncodingLayout& layout, const AgentSpec& base, Rng& rng);
/// Single-coordinate move: ring +-1 mod its modulus, Gaussian logit step, or
/// an edge flip that keeps every out-degree within the fan-out cap.
PolicyEncoding neighbour(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x, Rng& rng);

struct ObjectiveSpec {
  std::size_t horizon = 1;
  double discount = 1.0;
  /// H = 1 semantics regardless of horizon; ignores the discount.
  bool myopic = false;
  HarvestConfig harvest;
  /// Evolution between the horizon's iterations (disabled by default).
  EvolutionPolicy evolution = [] {
    EvolutionPolicy p;
    p.enabled = false;
    return p;
  }();
  PopulationProxy proxy = PopulationProxy::n_machines;
};

inline constexpr double kInvalidScore = -std::numeric_limits<double>::infinity();

/// Mean discounted GFER over the horizon. All randomness comes from `seeds`,
/// so two candidates scored with the same plan see common random numbers.
double evaluate_agents(const AgentSpec& society, const AgentSpec& environment, const AllocationDistribution& rho,
                       const ObjectiveSpec& objective, const SeedPlan& seeds);
/// evaluate_agents on a decoded encoding; kInvalidScore when decoding fails.
double evaluate_policy(const EncodingLayout& layout, const AgentSpec& base, const PolicyEncoding& x,
                       const AgentSpec& environment, const ObjectiveSpec& objective, const SeedPlan& seeds);

struct HistoryEntry {
  std::size_t round = 0;
  std::size_t candidate = 0;
  double score = 0.0;
  bool accepted = false;
};

struct InnerResult {
  PolicyEncoding encoding;
  AgentSpec society;
  AllocationDistribution rho;
  double score = kInvalidScore;
  std::vector<HistoryEntry> history;
  /// Best score after each evaluation.
  std::vector<double> best_so_far;
};

struct InnerOptions {
  std::size_t budget = 500;
  bool optimize_edges = false;
  /// Evaluations without improvement before a restart; 0 = max(8, 2 * dim).
  std::size_t patience = 0;
  std::size_t round = 0;
};

/// Random-restart hill climbing over the society's encoding against a fixed
/// environment; accepts strict improvements only.
InnerResult inner_optimize(const AgentSpec& society, const AgentSpec& environment, const ObjectiveSpec& objective,
                           const InnerOptions& options, Rng& rng);

struct EnvironmentFamily {
  std::size_t n = 1;
  Symbol cardinality = 2;
  Symbol msg_card = 1;
  std::size_t tau = 1;
  double sigma = 0.0;
  double edge_probability = 0.0;
  /// Machine cardinalities of the society being observed.
  std::vector<Symbol> external_cards;
};

/// Seeded environments: directed G(n, p) graphs without self-loops and
/// uniformly random linear-ring rules.
std::vector<AgentSpec> outer_random(const EnvironmentFamily& family, std::size_t samples, Rng& rng);

/// I(X^E_{t+1}; e^E_t | X^E_t) in bits under uniform probes over states and
/// inputs: exact when the probe space fits `limit`, else plug-in from
/// `samples` simulated iterations.
double responsiveness(const AgentSpec& environment, std::uint64_t samples = 100000,
                      std::size_t limit = kDefaultFlatteningLimit, std::uint64_t seed = 0);

struct AdversarialOptions {
  std::size_t rounds = 3;
  double epsilon = 0.0;
  InnerOptions society;
  /// Adversary evaluations per round.
  std::size_t adversary_budget = 100;
  std::uint64_t probe_samples = 20000;
};

struct AdversarialResult {
  AgentSpec environment;
  InnerResult society;
  /// Society best-response value per round.
  std::vector<double> round_values;
  /// Society score after each accepted adversary move (non-increasing within a round).
  std::vector<std::vector<double>> adversary_traces;
  double environment_responsiveness = 0.0;
  /// No environment with responsiveness >= epsilon was seen.
  bool infeasible = false;
};

/// Best-response alternation: society hill climbing, then environment hill
/// climbing that lowers the society's score, never accepting an environment
/// below the responsiveness floor.
AdversarialResult outer_adversarial(const AgentSpec& initial_environment, const AgentSpec& society,
                                    const ObjectiveSpec& objective, const AdversarialOptions& options, Rng& rng);

}  // namespace coevo
