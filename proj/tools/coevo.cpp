// Command-line harness: run, optimize, experiment, validate, analyze.
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coevo/harness.hpp"

namespace fs = std::filesystem;
using coevo::kExitConfigInvalid;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

fs::path config_dir() {
  if (const char* env = std::getenv("COEVO_CONFIG_DIR")) return env;
#ifdef COEVO_CONFIG_DIR
  return COEVO_CONFIG_DIR;
#else
  return "configs";
#endif
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::optional<std::string> scenario;
};

coevo::RunConfig load(const fs::path& path, const Overrides& o) {
  nlohmann::ordered_json doc = coevo::load_config_document(path);
  if (o.seed) doc["seed"] = *o.seed;
  if (o.scenario) doc["scenario"] = *o.scenario;
  if (o.replicates) {
    if (!doc.contains("harvest")) doc["harvest"] = nlohmann::ordered_json::object();
    doc["harvest"]["replicates"] = *o.replicates;
  }
  coevo::RunConfig cfg = coevo::parse_config(doc);
  cfg.source = doc;
  return cfg;
}

fs::path default_out(const coevo::RunConfig& cfg) { return fs::path("runs") / cfg.name; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-evolving society and environment machines"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  Overrides ov;
  bool quiet = false;
  std::string scenario_arg;
  std::string run_dir;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config, "Config JSON file");
    if (config_required) opt->required();
    sub->add_option("--seed", ov.seed, "Master seed override");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--replicates", ov.replicates, "Harvest replicate count override");
    sub->add_option("--scenario", ov.scenario, "Scenario override");
    sub->add_flag("--quiet", quiet, "Suppress per-iteration output");
  };

  CLI::App* run = app.add_subcommand("run", "Simulate a config and write a run directory");
  add_common(run, true);
  CLI::App* optimize = app.add_subcommand("optimize", "Optimise the society policy");
  add_common(optimize, true);
  CLI::App* experiment = app.add_subcommand("experiment", "Run a named preset scenario");
  experiment->add_option("preset", scenario_arg, "malthus, malthus_control, runaway, phase, kelly, adversarial")
      ->required();
  add_common(experiment, false);
  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config, "Config JSON file")->required();
  CLI::App* analyze = app.add_subcommand("analyze", "Recompute detectors for a run directory");
  analyze->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, on_sigint);

  try {
    if (analyze->parsed()) return coevo::analyze_run_dir(run_dir, &std::cout);

    if (validate->parsed()) {
      const coevo::RunConfig cfg = load(config, ov);
      const coevo::ValidationReport rep = coevo::check_config(cfg);
      if (!rep.ok()) {
        std::cerr << rep.str() << "\n";
        return kExitConfigInvalid;
      }
      std::cout << "config ok: " << cfg.name << "\n";
      return coevo::kExitOk;
    }

    fs::path path = config;
    if (experiment->parsed() && path.empty()) path = config_dir() / (scenario_arg + ".json");
    coevo::RunConfig cfg = load(path, ov);
    if (experiment->parsed() && !ov.scenario && !config.empty()) cfg.scenario = scenario_arg;

    coevo::HarnessOptions opt;
    opt.out = out.empty() ? default_out(cfg) : fs::path(out);
    opt.quiet = quiet;
    opt.stop = &g_stop;
    opt.console = &std::cout;

    if (run->parsed()) return coevo::execute_run(cfg, opt);
    if (optimize->parsed()) return coevo::execute_optimize(cfg, opt);
    return coevo::execute_experiment(cfg, opt);
  } catch (const coevo::ConfigError& e) {
    std::cerr << "invalid config: " << e.report().str() << "\n";
    return kExitConfigInvalid;
  } catch (const coevo::ValidationFailure& e) {
    std::cerr << "invalid config: " << e.report().str() << "\n";
    return kExitConfigInvalid;
  } catch (const coevo::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return coevo::kExitContractViolation;
  }
}
