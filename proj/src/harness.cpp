#include "coevo/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "coevo/channel.hpp"

namespace coevo {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string join(const std::vector<Symbol>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::ostream& console(const HarnessOptions& opt) { return opt.console ? *opt.console : std::cout; }

void write_snapshot(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "config.json", cfg.source.dump(2) + "\n");
  write_text(dir / "seed.txt", std::to_string(cfg.sim.seed) + "\n");
}

void mark_truncated(const fs::path& dir, std::ofstream& jsonl, const std::string& reason) {
  json marker = {{"truncated", true}, {"reason", reason}};
  jsonl << marker.dump() << "\n";
  jsonl.flush();
  write_text(dir / "TRUNCATED", reason + "\n");
}

// p(w) of a memoryless winnings machine, read from its first kernel row.
std::optional<std::vector<double>> winnings_distribution(const AgentSpec& env, std::size_t machine, std::size_t k) {
  if (machine >= env.n()) return std::nullopt;
  const auto* kr = std::get_if<KernelRule>(&env.machines[machine].rule);
  if (!kr || kr->rows.empty()) return std::nullopt;
  std::vector<double> p(k, 0.0);
  for (const auto& br : kr->rows[0])
    if (br.out.state >= 0 && static_cast<std::size_t>(br.out.state) < k) p[static_cast<std::size_t>(br.out.state)] += br.prob;
  return p;
}

}  // namespace

json row_json(const LogRow& r) {
  json params = json::object();
  for (ParamKind k : kAllParams) {
    const double v = r.params.get(k);
    if (is_discrete(k))
      params[std::string(param_name(k))] = static_cast<std::uint64_t>(v);
    else
      params[std::string(param_name(k))] = v;
  }
  json j = {{"t", r.t},
            {"gfer_raw", r.harvest.gfer_raw},
            {"gfer_effective", r.harvest.gfer_effective},
            {"harvest_bits", r.harvest_bits},
            {"estimator", r.harvest.estimator},
            {"store_before", r.harvest.store_before},
            {"store_after", r.harvest.store_after}};
  if (r.kelly_log_growth) j["kelly_log_growth"] = *r.kelly_log_growth;
  j["params"] = params;
  j["state_profile"] = r.state_profile;
  j["edges"] = r.edges;
  j["sigma_society"] = r.sigma_society;
  j["sigma_environment"] = r.sigma_environment;
  j["population"] = r.population;
  j["giant_fraction"] = r.giant_fraction;
  j["rho"] = std::vector<double>(r.rho.rho.begin(), r.rho.rho.end());
  j["clamp_discard"] = r.clamp_discard;
  j["rounding_loss"] = r.rounding_loss;
  j["growth_stalled"] = r.growth_stalled;
  j["e_society"] = r.e_society;
  j["e_environment"] = r.e_environment;
  j["society_end"] = r.society_end;
  j["environment_end"] = r.environment_end;
  return j;
}

std::string csv_header() {
  return "t,gfer_raw,gfer_effective,harvest_bits,n_machines,tau,msg_card,state_profile,sigma_society,"
         "sigma_environment,fan_out,population,giant_fraction,store_after,escape,runaway";
}

std::string csv_line(const LogRow& r, bool escape, bool runaway) {
  std::ostringstream s;
  s << r.t << ',' << fmt(r.harvest.gfer_raw) << ',' << fmt(r.harvest.gfer_effective) << ',' << fmt(r.harvest_bits)
    << ',' << r.params.n_machines << ',' << r.params.tau << ',' << r.params.msg_card << ','
    << join(r.state_profile, ';') << ',' << fmt(r.sigma_society) << ',' << fmt(r.sigma_environment) << ','
    << r.params.fan_out << ',' << fmt(r.population) << ',' << fmt(r.giant_fraction) << ','
    << fmt(r.harvest.store_after) << ',' << (escape ? 1 : 0) << ',' << (runaway ? 1 : 0);
  return s.str();
}

DetectorReport run_detectors(const std::vector<double>& gfer, const std::vector<double>& population,
                             const std::vector<double>& giant, const DetectorConfig& cfg) {
  DetectorReport r;
  r.gfer = gfer;
  r.population = population;
  r.giant_component_fraction = giant;
  const auto esc = detect_escape(gfer, population, cfg.escape_delta, cfg.escape_k);
  const auto run = detect_runaway(gfer, population, cfg.runaway_threshold, cfg.runaway_k);
  for (std::size_t t = 0; t < esc.size(); ++t)
    if (esc[t]) r.escape.push_back(t);
  for (std::size_t t = 0; t < run.size(); ++t)
    if (run[t]) r.runaway.push_back(t);
  return r;
}

json report_json(const DetectorReport& r, const DetectorConfig& cfg) {
  return {{"escape_delta", cfg.escape_delta},
          {"escape_k", cfg.escape_k},
          {"runaway_threshold", cfg.runaway_threshold},
          {"runaway_k", cfg.runaway_k},
          {"escape", r.escape},
          {"runaway", r.runaway},
          {"giant_component_fraction", r.giant_component_fraction},
          {"population", r.population},
          {"gfer", r.gfer}};
}

int execute_run(const RunConfig& cfg, const HarnessOptions& opt) {
  write_snapshot(cfg, opt.out);
  std::ofstream jsonl(opt.out / "log.jsonl", std::ios::binary);
  std::vector<LogRow> rows;
  SimulationHooks hooks;
  hooks.should_stop = [&] { return opt.stop && opt.stop->load(); };
  hooks.on_row = [&](const LogRow& r) {
    jsonl << row_json(r).dump() << "\n";
    jsonl.flush();
    rows.push_back(r);
    if (!opt.quiet)
      console(opt) << "t=" << r.t << " gfer=" << fmt(r.harvest.gfer_effective) << " N=" << r.params.n_machines
                   << " P=" << fmt(r.population) << "\n";
  };

  SimulationLog log;
  int code = kExitOk;
  try {
    log = run_simulation(cfg.sim, hooks);
  } catch (const ContractViolation& e) {
    mark_truncated(opt.out, jsonl, std::string("contract violation: ") + e.what());
    console(opt) << "contract violation: " << e.what() << "\n";
    code = kExitContractViolation;
    log.truncated = false;
  } catch (const ValidationFailure& f) {
    mark_truncated(opt.out, jsonl, f.report().str());
    console(opt) << f.report().str() << "\n";
    code = kExitConfigInvalid;
  }
  if (log.truncated) mark_truncated(opt.out, jsonl, log.truncation_reason);

  write_text(opt.out / "initial.json",
             json{{"society", log.initial_society}, {"environment", log.initial_environment}}.dump() + "\n");

  std::vector<double> gfer, pop, giant;
  for (const auto& r : rows) {
    gfer.push_back(r.harvest.gfer_effective);
    pop.push_back(r.population);
    giant.push_back(r.giant_fraction);
  }
  const DetectorReport rep = run_detectors(gfer, pop, giant, cfg.detectors);
  write_text(opt.out / "detectors.json", report_json(rep, cfg.detectors).dump(2) + "\n");

  std::ostringstream csv;
  csv << csv_header() << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv << csv_line(rows[i], std::find(rep.escape.begin(), rep.escape.end(), i) != rep.escape.end(),
                    std::find(rep.runaway.begin(), rep.runaway.end(), i) != rep.runaway.end())
        << "\n";
  write_text(opt.out / "log.csv", csv.str());

  if (cfg.sim.harvest.mode == HarvestConfig::Mode::kelly && !rows.empty()) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r.kelly_log_growth.value_or(0.0);
    json summary = {{"iterations", rows.size()}, {"mean_log_growth", sum / static_cast<double>(rows.size())}};
    const KellyHarvest& k = cfg.sim.harvest.kelly;
    if (auto p = winnings_distribution(cfg.sim.environment, k.winnings_machine, k.odds.size())) {
      std::vector<double> b;
      for (std::size_t m : k.allocation_machines) b.push_back(static_cast<double>(cfg.sim.initial.society.at(m)));
      double total = 0.0;
      for (double v : b) total += v;
      if (total <= 0.0) std::fill(b.begin(), b.end(), 1.0);
      summary["closed_form_growth"] = kelly_growth_rate(WinningsModel{*p, k.odds, {}}, b);
    }
    write_text(opt.out / "summary.json", summary.dump(2) + "\n");
  }
  if (!opt.quiet)
    console(opt) << "escape flags: " << rep.escape.size() << ", run-away flags: " << rep.runaway.size() << "\n";
  return code;
}

int execute_optimize(const RunConfig& cfg, const HarnessOptions& opt) {
  write_snapshot(cfg, opt.out);
  std::ofstream jsonl(opt.out / "log.jsonl", std::ios::binary);
  Rng rng = SeedPlan(cfg.sim.seed).stream({0, AgentId::society, 0, 0, Purpose::optimizer});
  std::vector<HistoryEntry> history;
  json result;
  try {
    switch (cfg.optimizer.mode) {
      case OptimizerConfig::Mode::inner: {
        const InnerResult r = inner_optimize(cfg.sim.society, cfg.sim.environment, cfg.objective, cfg.optimizer.inner, rng);
        history = r.history;
        result = {{"mode", "inner"}, {"score", r.score}, {"ring", r.encoding.ring}, {"logits", r.encoding.logits}};
        break;
      }
      case OptimizerConfig::Mode::random: {
        const auto envs = outer_random(cfg.optimizer.family, cfg.optimizer.samples, rng);
        json scores = json::array();
        for (std::size_t i = 0; i < envs.size(); ++i) {
          InnerOptions io = cfg.optimizer.inner;
          io.round = i;
          const InnerResult r = inner_optimize(cfg.sim.society, envs[i], cfg.objective, io, rng);
          history.insert(history.end(), r.history.begin(), r.history.end());
          scores.push_back({{"environment", i}, {"edges", envs[i].graph.edges.size()}, {"score", r.score},
                            {"responsiveness", responsiveness(envs[i])}});
        }
        result = {{"mode", "random"}, {"environments", scores}};
        break;
      }
      case OptimizerConfig::Mode::adversarial: {
        const AdversarialResult r =
            outer_adversarial(cfg.sim.environment, cfg.sim.society, cfg.objective, cfg.optimizer.adversarial, rng);
        history = r.society.history;
        result = {{"mode", "adversarial"},
                  {"round_values", r.round_values},
                  {"adversary_traces", r.adversary_traces},
                  {"final_score", r.society.score},
                  {"environment_responsiveness", r.environment_responsiveness},
                  {"epsilon", cfg.optimizer.adversarial.epsilon},
                  {"infeasible", r.infeasible}};
        break;
      }
    }
  } catch (const ContractViolation& e) {
    mark_truncated(opt.out, jsonl, std::string("contract violation: ") + e.what());
    console(opt) << "contract violation: " << e.what() << "\n";
    return kExitContractViolation;
  }
  std::ostringstream csv;
  csv << "round,candidate,score,accepted\n";
  for (const auto& h : history) {
    jsonl << json{{"round", h.round}, {"candidate", h.candidate}, {"score", h.score}, {"accepted", h.accepted}}.dump()
          << "\n";
    csv << h.round << ',' << h.candidate << ',' << fmt(h.score) << ',' << (h.accepted ? 1 : 0) << "\n";
  }
  write_text(opt.out / "history.csv", csv.str());
  write_text(opt.out / "log.csv", csv.str());
  write_text(opt.out / "result.json", result.dump(2) + "\n");
  write_text(opt.out / "detectors.json", report_json(DetectorReport{}, cfg.detectors).dump(2) + "\n");
  if (!opt.quiet) console(opt) << result.dump(2) << "\n";
  return kExitOk;
}

namespace {

int execute_phase(const RunConfig& cfg, const HarnessOptions& opt) {
  write_snapshot(cfg, opt.out);
  std::vector<double> degrees = cfg.phase.degrees;
  if (degrees.empty())
    for (int i = 2; i <= 30; ++i) degrees.push_back(0.1 * i);
  const PhaseSweep sweep = phase_sweep(cfg.phase.n, degrees, cfg.phase.seeds, cfg.sim.seed);
  std::ofstream jsonl(opt.out / "log.jsonl", std::ios::binary);
  std::ostringstream csv;
  csv << "mean_degree,median_fraction,mean_fraction\n";
  std::vector<double> medians;
  for (const auto& p : sweep.points) {
    jsonl << json{{"mean_degree", p.mean_degree}, {"median_fraction", p.median_fraction},
                  {"mean_fraction", p.mean_fraction}}
                 .dump()
          << "\n";
    csv << fmt(p.mean_degree) << ',' << fmt(p.median_fraction) << ',' << fmt(p.mean_fraction) << "\n";
    medians.push_back(p.median_fraction);
  }
  write_text(opt.out / "phase.csv", csv.str());
  write_text(opt.out / "log.csv", csv.str());
  json rep = report_json(DetectorReport{}, cfg.detectors);
  rep["giant_component_fraction"] = medians;
  rep["crossing_mean_degree"] = sweep.crossing;
  write_text(opt.out / "detectors.json", rep.dump(2) + "\n");
  if (!opt.quiet) console(opt) << "median giant fraction crosses 0.5 at mean degree " << fmt(sweep.crossing) << "\n";
  return kExitOk;
}

}  // namespace

int execute_experiment(const RunConfig& cfg, const HarnessOptions& opt) {
  if (cfg.scenario == "phase") return execute_phase(cfg, opt);
  if (cfg.scenario == "adversarial") return execute_optimize(cfg, opt);
  return execute_run(cfg, opt);
}

LoggedSeries read_log_series(const fs::path& path) {
  LoggedSeries s;
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (!j.contains("gfer_effective")) continue;
    s.gfer.push_back(j.at("gfer_effective").get<double>());
    s.population.push_back(j.value("population", 0.0));
    s.giant.push_back(j.value("giant_fraction", 0.0));
  }
  return s;
}

int analyze_run_dir(const fs::path& dir, std::ostream* out) {
  DetectorConfig dc;
  if (fs::exists(dir / "config.json")) {
    try {
      dc = load_config(dir / "config.json").detectors;
    } catch (const ConfigError& e) {
      if (out) *out << e.report().str() << "\n";
      return kExitConfigInvalid;
    }
  }
  LoggedSeries s;
  if (fs::exists(dir / "log.jsonl")) s = read_log_series(dir / "log.jsonl");
  const DetectorReport rep = run_detectors(s.gfer, s.population, s.giant, dc);
  write_text(dir / "detectors.json", report_json(rep, dc).dump(2) + "\n");
  std::ostringstream csv;
  csv << "t,gfer,population,gfer_per_capita,giant_fraction,escape,runaway\n";
  for (std::size_t t = 0; t < s.gfer.size(); ++t) {
    const bool e = std::find(rep.escape.begin(), rep.escape.end(), t) != rep.escape.end();
    const bool r = std::find(rep.runaway.begin(), rep.runaway.end(), t) != rep.runaway.end();
    csv << t << ',' << fmt(s.gfer[t]) << ',' << fmt(s.population[t]) << ','
        << fmt(s.population[t] > 0 ? s.gfer[t] / s.population[t] : 0.0) << ',' << fmt(s.giant[t]) << ','
        << (e ? 1 : 0) << ',' << (r ? 1 : 0) << "\n";
  }
  write_text(dir / "summary.csv", csv.str());
  if (out)
    *out << "iterations: " << s.gfer.size() << ", escape flags: " << rep.escape.size()
         << ", run-away flags: " << rep.runaway.size() << "\n";
  return kExitOk;
}

ValidationReport check_config(const RunConfig& cfg) {
  ValidationReport rep;
  if (cfg.scenario == "phase") {
    if (cfg.phase.n == 0) rep.violations.push_back("phase sweep needs n >= 1");
    if (cfg.phase.seeds == 0) rep.violations.push_back("phase sweep needs at least one seed");
    return rep;
  }
  const SimulationConfig& s = cfg.sim;
  for (const auto& v : validate_pair(s.society, s.environment).violations) rep.violations.push_back(v);
  if (!rep.ok()) return rep;
  if (!s.evolution.allocation.valid()) rep.violations.push_back("allocation does not sum to 1");
  for (ParamKind k : kAllParams) {
    const CostFunction& c = s.evolution.costs[slot(k)];
    for (double x : {0.0, 0.5, 1.0, 3.0, 7.5}) {
      const double e = c.cost(x);
      if (std::abs(c.cost(c.invert(e).value) - e) > 1e-12)
        rep.violations.push_back("cost round trip fails for " + std::string(param_name(k)));
    }
  }
  if (s.harvest.mode != HarvestConfig::Mode::kelly) {
    try {
      check_flattening_limit(s.society, s.environment, s.harvest.flattening_limit);
    } catch (const ContractViolation& e) {
      rep.violations.push_back(e.what());
    }
  }
  try {
    const Boundary b{make_agent_state(s.society, topology(s.society.graph),
                                      s.initial.kind == InitialState::Kind::point ? s.initial.society
                                                                                  : StateVec(s.society.n(), 0)),
                     make_agent_state(s.environment, topology(s.environment.graph),
                                      s.initial.kind == InitialState::Kind::point ? s.initial.environment
                                                                                  : StateVec(s.environment.n(), 0))};
    const SeedPlan plan(s.seed);
    const IterationResult a = run_iteration(s.society, s.environment, b, plan, 0);
    const IterationResult c = run_iteration(s.society, s.environment, b, plan, 0);
    if (a.end.society != c.end.society || a.end.environment != c.end.environment)
      rep.violations.push_back("iteration replay is not deterministic");
  } catch (const ContractViolation& e) {
    rep.violations.push_back(std::string("iteration failed: ") + e.what());
  }
  return rep;
}

}  // namespace coevo
