#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coevo/engine.hpp"
#include "coevo/evolution.hpp"
#include "coevo/harvest.hpp"

namespace coevo {

enum class PopulationProxy { n_machines, sum_log2_card, r_environment };

/// Kelly harvest wiring: the winnings outcome is the ending state of one
/// environment machine, the bet is the society's allocation counts at the
/// start of the iteration (b_w proportional to the state of machine w).
struct KellyHarvest {
  std::size_t winnings_machine = 0;
  std::vector<std::size_t> allocation_machines;
  std::vector<double> odds;
};

struct HarvestConfig {
  enum class Mode { mi_exact, mi_plugin, kelly };
  Mode mode = Mode::mi_exact;
  std::uint64_t replicates = 10000;
  bool miller_madow = false;
  BoundaryModel boundary;
  std::size_t flattening_limit = kDefaultFlatteningLimit;
  /// GFER = scale * harvest * P^population_gain in the MI modes.
  double scale = 1.0;
  double population_gain = 0.0;
  /// Environment resource store drained by the GFER; absent = unlimited.
  std::optional<double> store;
  KellyHarvest kelly;
};

std::string harvest_mode_name(HarvestConfig::Mode m);

/// Mutual-information harvest (bits) under the configured estimator. Kelly
/// mode has no MI form and is rejected.
double harvest_mi(const AgentSpec& society, const AgentSpec& environment, const HarvestConfig& cfg,
                  const SeedPlan& seeds);

double population(const AgentSpec& society, const AgentSpec& environment, PopulationProxy proxy, double r_max);

/// scale * bits * P^population_gain.
double scale_harvest(double bits, const AgentSpec& society, const AgentSpec& environment, const HarvestConfig& cfg,
                     PopulationProxy proxy, double r_max);

enum class RhoSchedule { fixed, per_iteration };

struct InitialState {
  enum class Kind { point, uniform };
  Kind kind = Kind::point;
  StateVec society;
  StateVec environment;
};

struct SimulationConfig {
  AgentSpec society;
  AgentSpec environment;
  HarvestConfig harvest;
  EvolutionPolicy evolution;
  RhoSchedule rho_schedule = RhoSchedule::fixed;
  /// Candidate allocations tried per iteration under the per_iteration schedule.
  std::size_t rho_candidates = 8;
  PopulationProxy proxy = PopulationProxy::n_machines;
  InitialState initial;
  std::uint64_t iterations = 10;
  std::uint64_t seed = 0;
};

struct LogRow {
  std::uint64_t t = 0;
  ComputationParams params;
  std::vector<Symbol> state_profile;
  std::size_t edges = 0;
  double sigma_society = 0.0;
  double sigma_environment = 0.0;
  double population = 0.0;
  double harvest_bits = 0.0;
  /// Realised log2 wealth multiplier; Kelly mode only.
  std::optional<double> kelly_log_growth;
  HarvestReport harvest;
  AllocationDistribution rho;
  double clamp_discard = 0.0;
  double rounding_loss = 0.0;
  bool growth_stalled = false;
  double giant_fraction = 0.0;
  ExternalInput e_society;
  ExternalInput e_environment;
  StateVec society_end;
  StateVec environment_end;
};

struct SimulationLog {
  StateVec initial_society;
  StateVec initial_environment;
  std::vector<LogRow> rows;
  bool truncated = false;
  std::string truncation_reason;
};

struct SimulationHooks {
  /// Polled before every iteration; returning true truncates the run.
  std::function<bool()> should_stop;
  /// Called after each iteration's row is complete.
  std::function<void(const LogRow&)> on_row;
};

/// Chains T iterations: run the iteration, harvest, deplete, evolve. An
/// evolution step that yields an invalid pair halts the run with the
/// validation report as the truncation reason.
SimulationLog run_simulation(const SimulationConfig& config, const SimulationHooks& hooks = {});

/// Society scalar series used by the detectors.
std::vector<double> gfer_series(const SimulationLog& log);
std::vector<double> population_series(const SimulationLog& log);

}  // namespace coevo
