#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coevo/core.hpp"
#include "coevo/rng.hpp"

namespace coevo {

/// The seven computation parameters that carry a thermodynamic cost.
enum class ParamKind : std::size_t { tau = 0, msg_card, n_machines, state_card, r_society, r_environment, fan_out };

inline constexpr std::size_t kParamCount = 7;
inline constexpr std::array<ParamKind, kParamCount> kAllParams{
    ParamKind::tau,      ParamKind::msg_card,      ParamKind::n_machines, ParamKind::state_card,
    ParamKind::r_society, ParamKind::r_environment, ParamKind::fan_out};

std::string_view param_name(ParamKind k);
std::optional<ParamKind> param_from_name(std::string_view name);
bool is_discrete(ParamKind k);

template <typename T>
using PerParam = std::array<T, kParamCount>;

inline std::size_t slot(ParamKind k) { return static_cast<std::size_t>(k); }

struct CostInverse {
  double value = 0.0;
  /// Energy actually converted into the value; below `energy` only when clamped.
  double spent = 0.0;
  bool clamped = false;
};

/// Strictly increasing, analytically invertible cost C(z) on z >= 0 with C(0) = 0.
///  identity: C(z) = z
///  power:    C(z) = z^alpha, alpha in (0, 1]
///  logit:    C(z) = ceiling * tanh(z / (2 * scale)), saturating at `ceiling`
struct CostFunction {
  enum class Family { identity, power, logit };
  Family family = Family::identity;
  double exponent = 1.0;
  double scale = 1.0;
  double ceiling = 1.0;

  double cost(double value) const;
  /// Energy at or above a logit ceiling is clamped just below it and flagged.
  CostInverse invert(double energy) const;
};

std::string_view family_name(CostFunction::Family f);

struct AllocationDistribution {
  PerParam<double> rho{};

  static AllocationDistribution uniform();
  static AllocationDistribution concentrated(ParamKind k);
  bool valid() const;
};

/// Softmax of seven logits; the rounding residue goes to the largest entry so
/// the fractions sum to 1 exactly.
AllocationDistribution allocation_from_logits(std::span<const double> logits);

struct ComputationParams {
  std::size_t tau = 1;
  std::size_t msg_card = 1;
  std::size_t n_machines = 1;
  std::size_t state_card = 1;
  double r_society = 1.0;
  double r_environment = 1.0;
  std::size_t fan_out = 0;

  double get(ParamKind k) const;
  void set(ParamKind k, double v);
  friend bool operator==(const ComputationParams&, const ComputationParams&) = default;
};

struct ParamBounds {
  double floor = 1.0;
  double ceiling = 1e9;
};

/// A machine template in a Guttman sequence: added only in order, and only
/// once the best GFER seen so far reaches `unlock_gfer`.
struct GuttmanTemplate {
  std::string label;
  double unlock_gfer = 0.0;
  /// 0 = use the society's current generic state cardinality.
  Symbol cardinality = 0;
};

struct GrowthPolicy {
  enum class RuleFamily { linear_ring, identity };
  RuleFamily family = RuleFamily::linear_ring;
  /// New machines must receive an edge from a node still below the fan-out cap.
  bool require_connected = true;
  std::vector<GuttmanTemplate> guttman;
};

struct EvolutionPolicy {
  bool enabled = true;
  AllocationDistribution allocation = AllocationDistribution::uniform();
  PerParam<CostFunction> costs{};
  PerParam<ParamBounds> bounds = default_bounds();
  double kappa = 1.0;
  double r_max = 1000.0;
  GrowthPolicy growth;

  static PerParam<ParamBounds> default_bounds();
};

struct EvolutionOutcome {
  ComputationParams params;
  PerParam<double> allocated{};
  /// Pre-rounding values C^-1(allocated).
  PerParam<double> raw{};
  /// Energy converted into each raw value (equals allocated unless clamped).
  PerParam<double> spent{};
  /// Energy lost to logit clamping.
  double clamp_discard = 0.0;
  /// kappa*GFER minus the cost of the final (rounded, clamped) values. Negative
  /// when floors lift parameters above what the budget paid for.
  double rounding_loss = 0.0;
  bool clamped = false;
};

/// raw_i = C_i^-1(rho_i * kappa * gfer); discrete parameters are floor-rounded,
/// everything clamped to its bounds, r's additionally to [1, r_max].
EvolutionOutcome evolve_parameters(const ComputationParams& current, double gfer_effective,
                                   const EvolutionPolicy& policy);

ComputationParams extract_params(const AgentSpec& society, const AgentSpec& environment, double r_max);

// Structural changes --------------------------------------------------------

struct GrowthState {
  std::size_t guttman_next = 0;
  double gfer_max = 0.0;
};

struct GrowResult {
  AgentSpec agent;
  /// new index -> old index, kNoSource for added machines.
  std::vector<std::size_t> node_map;
  bool stalled = false;
  std::size_t added = 0;
};

/// Grows to target_n (random attachment under the fan-out cap, seeded rules,
/// Guttman order when configured) or shrinks by dropping the highest-index
/// generic machines. Throws ValidationFailure when connectivity is required
/// but no node has spare fan-out.
GrowResult grow_machines(const AgentSpec& agent, std::size_t target_n, const GrowthPolicy& policy, Rng& rng,
                         GrowthState& state);

/// Sets every generic machine's |X| and the agent's |M|; rules are reshaped.
AgentSpec resize_state_and_message_spaces(const AgentSpec& agent, Symbol new_state_card, Symbol new_msg_card);

/// Lowers/raises the fan-out cap; surplus edges to the highest-index children are dropped.
AgentSpec set_fan_out_cap(const AgentSpec& agent, std::size_t cap);

/// Re-points the agent's external input at a reshaped observed agent.
/// external_map[j] is the old component feeding new component j.
AgentSpec rebind_external(const AgentSpec& agent, std::vector<Symbol> new_external_cards,
                          const std::vector<std::size_t>& external_map);

/// Removes machines and their edges, renumbering the rest.
GrowResult remove_machines(const AgentSpec& agent, const std::vector<std::size_t>& doomed);

struct AppliedParams {
  AgentSpec society;
  AgentSpec environment;
  /// new society index -> old society index (kNoSource for added machines).
  std::vector<std::size_t> society_map;
  bool growth_stalled = false;
};

/// Applies a parameter tuple to the agents. The environment only changes in
/// sigma^E and in the alphabet of its external input, which tracks the
/// society's reshaped joint state.
AppliedParams apply_params(const AgentSpec& society, const AgentSpec& environment, const ComputationParams& params,
                           const EvolutionPolicy& policy, Rng& rng, GrowthState& growth);

/// Random linear-ring rule with coefficients uniform in each modulus.
LinearRingRule random_ring_rule(Symbol state_card, Symbol msg_card, std::size_t n_external, std::size_t arity,
                                Rng& rng);

}  // namespace coevo
