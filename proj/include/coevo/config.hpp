#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coevo/optimize.hpp"
#include "coevo/simulation.hpp"

namespace coevo {

/// Malformed or invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(ValidationReport r);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct DetectorConfig {
  double escape_delta = 0.1;
  std::size_t escape_k = 2;
  double runaway_threshold = 0.5;
  std::size_t runaway_k = 2;
};

struct OptimizerConfig {
  enum class Mode { inner, random, adversarial };
  Mode mode = Mode::inner;
  InnerOptions inner;
  AdversarialOptions adversarial;
  /// outer_random: environments sampled and scored against the optimised society.
  std::size_t samples = 4;
  EnvironmentFamily family;
};

struct PhaseConfig {
  std::size_t n = 200;
  std::size_t seeds = 100;
  std::vector<double> degrees;
};

struct RunConfig {
  std::string name = "run";
  std::string scenario = "run";
  SimulationConfig sim;
  ObjectiveSpec objective;
  OptimizerConfig optimizer;
  PhaseConfig phase;
  DetectorConfig detectors;
  /// The document the config was parsed from (with any seed override applied).
  nlohmann::ordered_json source;
};

RunConfig parse_config(nlohmann::ordered_json doc);
RunConfig load_config(const std::filesystem::path& path);
/// Raw JSON of a config file, for applying command-line overrides before parsing.
nlohmann::ordered_json load_config_document(const std::filesystem::path& path);

/// Agent from its JSON description. `observed_cards` fills a missing
/// external_cards entry (identity encoding of the other agent's state).
AgentSpec parse_agent(const nlohmann::ordered_json& j, const std::vector<Symbol>& observed_cards);

std::string proxy_name(PopulationProxy p);

}  // namespace coevo
