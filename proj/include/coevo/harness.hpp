#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "coevo/config.hpp"
#include "coevo/detectors.hpp"

namespace coevo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitContractViolation = 3;

nlohmann::ordered_json row_json(const LogRow& row);
std::string csv_header();
std::string csv_line(const LogRow& row, bool escape, bool runaway);

struct DetectorReport {
  std::vector<std::size_t> escape;
  std::vector<std::size_t> runaway;
  std::vector<double> giant_component_fraction;
  std::vector<double> population;
  std::vector<double> gfer;
};

/// Pure function of the logged series.
DetectorReport run_detectors(const std::vector<double>& gfer, const std::vector<double>& population,
                             const std::vector<double>& giant, const DetectorConfig& cfg);
nlohmann::ordered_json report_json(const DetectorReport& r, const DetectorConfig& cfg);

struct HarnessOptions {
  std::filesystem::path out;
  bool quiet = false;
  /// Set asynchronously (SIGINT) to truncate a run between iterations.
  const std::atomic<bool>* stop = nullptr;
  std::ostream* console = nullptr;
};

/// `run`: simulate and write config snapshot, seed, JSONL, CSV and detector
/// report. Returns the process exit code.
int execute_run(const RunConfig& cfg, const HarnessOptions& opt);
/// `optimize`: inner, random or adversarial optimisation with a history CSV.
int execute_optimize(const RunConfig& cfg, const HarnessOptions& opt);
/// `experiment`: dispatches on cfg.scenario (phase sweep, optimisation or run).
int execute_experiment(const RunConfig& cfg, const HarnessOptions& opt);
/// `analyze`: recompute detectors from <dir>/log.jsonl into detectors.json and summary.csv.
int analyze_run_dir(const std::filesystem::path& dir, std::ostream* console = nullptr);

/// Checks a parsed config beyond parsing: pair validity, cost round trips,
/// allocation validity, enumeration size, and one-iteration replay.
ValidationReport check_config(const RunConfig& cfg);

/// Society/environment dynamics of a log's row as (GFER, population, giant fraction) triples.
struct LoggedSeries {
  std::vector<double> gfer;
  std::vector<double> population;
  std::vector<double> giant;
};
LoggedSeries read_log_series(const std::filesystem::path& jsonl);

}  // namespace coevo
