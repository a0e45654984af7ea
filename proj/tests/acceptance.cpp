// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include "coevo/adapters.hpp"
#include "coevo/channel.hpp"
#include "coevo/detectors.hpp"
#include "coevo/harness.hpp"
#include "coevo/harvest.hpp"
#include "coevo/optimize.hpp"
#include "support.hpp"

using namespace coevo;
using namespace coevo::test;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1 ------------------------------------------------------------------------

Verdict mi_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const double copy = mi_exact(binary_copier(0.0), binary_identity(0.0), BoundaryModel{});
  bool ok = copy == 1.0;

  // Random pairs covering flattened joint sizes from 4 up to 256.
  struct Shape {
    std::size_t ns;
    Symbol cs;
    std::size_t ne;
    Symbol ce;
  };
  const std::vector<Shape> shapes{{1, 2, 1, 2}, {2, 2, 1, 2}, {1, 3, 1, 3}, {2, 2, 2, 2}, {2, 3, 1, 3},
                                  {3, 2, 2, 2}, {2, 3, 2, 3}, {2, 4, 1, 4}, {4, 2, 2, 2}, {3, 2, 3, 2},
                                  {4, 2, 4, 2}, {2, 4, 2, 4}, {1, 4, 2, 8}, {2, 2, 3, 2}};
  Rng gen(101);
  double worst = 0.0;
  std::size_t systems = 0;
  auto compare = [&](const AgentSpec& soc, const AgentSpec& env, const BoundaryModel& model, std::uint64_t seed) {
    const double exact = mi_exact(soc, env, model);
    const double plug = mi_plugin(ensemble_rollout(soc, env, model, SeedPlan(seed), 100000));
    worst = std::max(worst, std::abs(plug - exact));
    ++systems;
  };
  for (const Shape& sh : shapes) {
    AgentSpec env = random_agent(sh.ne, sh.ce, 2, std::vector<Symbol>(sh.ns, sh.cs), gen);
    AgentSpec soc = random_agent(sh.ns, sh.cs, 2, env.cardinalities(), gen);
    soc.sigma = gen.uniform();
    env.sigma = gen.uniform() * 0.5;
    const auto kind = systems % 2 ? BoundaryModel::Kind::uniform : BoundaryModel::Kind::warmup;
    compare(soc, env, BoundaryModel{kind, {}, {}}, 1000 + systems);
  }
  // Stochastic kernels: Glauber spins driven by a noisy copier society.
  GlauberOptions g;
  g.beta = 0.8;
  g.external_coupling = 1.0;
  g.external_cards = {2, 2};
  const std::vector<double> J{0, 0.7, 0.7, 0};
  AgentSpec spins = glauber_mcm(J, 2, g);
  spins.sigma = 0.2;
  AgentSpec soc = random_agent(2, 2, 2, spins.cardinalities(), gen);
  soc.sigma = 0.3;
  compare(soc, spins, BoundaryModel{}, 77);
  compare(binary_copier(0.25), binary_identity(), BoundaryModel{}, 78);

  const double secs = seconds_since(t0);
  ok = ok && worst <= 0.02 && secs < 60.0;
  return {ok, "noiseless copy = " + num(copy, 17) + " bit; max |plugin - exact| = " + num(worst) + " over " +
                  std::to_string(systems) + " systems (tol 0.02); " + num(secs, 3) + " s (< 60)"};
}

// 2 ------------------------------------------------------------------------

double brute_force_capacity(double sigma, int k) {
  std::vector<std::vector<double>> joint(k, std::vector<double>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) joint[i][j] = (1.0 / k) * ((i == j ? 1.0 - sigma : 0.0) + sigma / k);
  std::vector<double> col(k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) col[j] += joint[i][j];
  double mi = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (joint[i][j] > 0) mi += joint[i][j] * std::log2(joint[i][j] / ((1.0 / k) * col[j]));
  return mi;
}

Verdict channel_limits() {
  Rng rng(202);
  bool copies = true;
  for (int c = 0; c < 10000; ++c) {
    const std::size_t n = 1 + rng.below(5);
    ObservationChannel ch{0.0, {}};
    std::vector<Symbol> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      ch.alphabet.push_back(1 + static_cast<Symbol>(rng.below(6)));
      x[i] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(ch.alphabet[i])));
    }
    copies = copies && observe(x, ch, rng) == x;
  }
  double worst_freq = 0.0;
  for (Symbol k : {2, 3, 4}) {
    const ObservationChannel ch{1.0, {k}};
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(observe(std::vector<Symbol>{0}, ch, rng)[0])] += 1;
    for (double c : counts) worst_freq = std::max(worst_freq, std::abs(c / draws - 1.0 / k));
  }
  double worst_cap = 0.0;
  for (int k : {2, 3, 4})
    for (int s = 1; s <= 9; ++s)
      worst_cap = std::max(worst_cap, std::abs(channel_capacity_bits(s / 10.0, k) - brute_force_capacity(s / 10.0, k)));
  const bool ok = copies && worst_freq <= 0.01 && worst_cap <= 1e-9;
  return {ok, std::string("sigma=0 copies ") + (copies ? "10^4/10^4" : "FAILED") +
                  "; max uniform deviation " + num(worst_freq) + " (tol 0.01); max capacity error " +
                  num(worst_cap) + " (tol 1e-9)"};
}

// 3 ------------------------------------------------------------------------

Verdict evolution_budget() {
  Rng gen(303);
  double worst_budget = 0.0, worst_trip = 0.0;
  const std::array<CostFunction::Family, 3> families{CostFunction::Family::identity, CostFunction::Family::power,
                                                     CostFunction::Family::logit};
  for (auto fam : families)
    for (int trial = 0; trial < 10000; ++trial) {
      EvolutionPolicy p;
      std::vector<double> logits(kParamCount);
      for (auto& l : logits) l = gen.uniform() * 8 - 4;
      p.allocation = allocation_from_logits(logits);
      for (auto& c : p.costs) {
        c.family = fam;
        c.exponent = 0.1 + 0.9 * gen.uniform();
        c.scale = 0.5 + 2 * gen.uniform();
        c.ceiling = 10 + 40 * gen.uniform();
      }
      p.kappa = 0.25 + 4 * gen.uniform();
      ComputationParams cur;
      cur.tau = 1 + gen.below(8);
      cur.msg_card = 1 + gen.below(8);
      cur.n_machines = 1 + gen.below(8);
      cur.state_card = 1 + gen.below(8);
      cur.r_society = 1 + 100 * gen.uniform();
      cur.r_environment = 1 + 100 * gen.uniform();
      cur.fan_out = 1 + gen.below(4);
      // Keep logit budgets below every ceiling so the spend is complete.
      const double gfer = fam == CostFunction::Family::logit ? gen.uniform() * 9.0 / p.kappa : gen.uniform() * 50;
      const EvolutionOutcome o = evolve_parameters(cur, gfer, p);
      double spent = 0.0;
      for (std::size_t i = 0; i < kParamCount; ++i) spent += p.costs[i].cost(o.raw[i]);
      worst_budget = std::max(worst_budget, std::abs(spent - p.kappa * gfer));
      const double x = fam == CostFunction::Family::logit ? gen.uniform() * p.costs[0].ceiling * 0.999
                                                          : gen.uniform() * 100;
      worst_trip = std::max(worst_trip, std::abs(p.costs[0].cost(p.costs[0].invert(x).value) - x));
    }

  // The environment's own computation parameters never move except sigma.
  bool immutable = true;
  for (int trial = 0; trial < 500; ++trial) {
    AgentSpec env = random_agent(1 + gen.below(3), 2 + static_cast<Symbol>(gen.below(2)), 2, {2, 2}, gen);
    AgentSpec soc = random_agent(2, 2, 2, env.cardinalities(), gen);
    EvolutionPolicy policy;
    const ComputationParams before = extract_params(soc, env, policy.r_max);
    const EvolutionOutcome o = evolve_parameters(before, gen.uniform() * 40, policy);
    GrowthState gs;
    const AppliedParams ap = apply_params(soc, env, o.params, policy, gen, gs);
    const AgentSpec& e2 = ap.environment;
    immutable = immutable && e2.cardinalities() == env.cardinalities() && e2.graph.edges == env.graph.edges &&
                e2.graph.fan_out_cap == env.graph.fan_out_cap && e2.tau == env.tau && e2.msg_card == env.msg_card &&
                e2.sigma == sigma_from_precision(o.params.r_environment, policy.r_max);
    if (ap.society_map == std::vector<std::size_t>{0, 1} && ap.society.cardinalities() == soc.cardinalities())
      immutable = immutable && propagation_table(e2).entries == propagation_table(env).entries;
  }
  const bool ok = worst_budget <= 1e-9 && worst_trip <= 1e-12 && immutable;
  return {ok, "max budget error " + num(worst_budget) + " (tol 1e-9) over 3 x 10^4 triples; max round-trip error " +
                  num(worst_trip) + " (tol 1e-12); environment " + (immutable ? "unchanged except sigma" : "ALTERED")};
}

// 4 ------------------------------------------------------------------------

Verdict conservation() {
  Rng gen(404);
  bool conserved = true;
  for (int schedule = 0; schedule < 1000 && conserved; ++schedule) {
    // A ring of resource stores, each sending a state-dependent amount downstream.
    const std::size_t n = 2 + gen.below(4);
    AgentSpec a;
    a.msg_card = 8;
    a.graph.n = n;
    a.graph.fan_out_cap = 1;
    for (std::size_t v = 0; v < n; ++v) a.graph.edges.push_back({v, (v + 1) % n});
    std::sort(a.graph.edges.begin(), a.graph.edges.end());
    for (std::size_t v = 0; v < n; ++v) {
      MachineSpec m;
      m.cardinality = 128;
      m.role = MachineRole::resource_store;
      const Symbol salt = static_cast<Symbol>(gen.below(8));
      m.rule = make_table(RuleDomain{128, {}, {}, 8, 1}, [&](const RuleDomain::Key& k) {
        return std::optional<MachineOutput>(MachineOutput{0, (k.x * 5 + k.inbox[0] + salt) % 8});
      });
      a.machines.push_back(m);
    }
    const Topology topo = topology(a.graph);
    StateVec start(n);
    for (auto& x : start) x = static_cast<Symbol>(gen.below(20));
    AgentState s = make_agent_state(a, topo, start);
    Symbol total = 0;
    for (Symbol x : start) total += x;
    auto rngs = streams(n);
    for (int t = 0; t < 40 && conserved; ++t) {
      s = run_timestep(a, topo, s, {}, rngs).next;
      Symbol now = 0;
      for (std::size_t v = 0; v < n; ++v) now += s.states[v] + s.inbox[v][0];
      conserved = now == total;
    }
  }
  bool exact = true;
  for (int seq = 0; seq < 10000; ++seq) {
    const double initial = quantize_energy(gen.uniform() * 100.0);
    double store = initial, harvested = 0.0;
    const int steps = 1 + static_cast<int>(gen.below(40));
    for (int t = 0; t < steps; ++t) {
      const DepletionResult r = deplete(store, gen.uniform() * 12.0 - 1.0);
      exact = exact && r.store >= 0.0 && r.gfer_effective >= 0.0;
      harvested += r.gfer_effective;
      store = r.store;
    }
    exact = exact && harvested == initial - store;
  }
  return {conserved && exact, std::string("1000 engine transfer schedules ") + (conserved ? "conserve" : "LEAK") +
                                  "; depletion sum " + (exact ? "exact" : "INEXACT") + " over 10^4 sequences"};
}

// 5 ------------------------------------------------------------------------

Verdict kelly() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(505);
  double worst_step = 0.0;
  for (int d = 0; d < 5; ++d) {
    const std::size_t k = d < 2 ? 2 : 3;
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) sum += (v = 0.1 + rng.uniform());
    for (auto& v : p) v /= sum;
    std::vector<double> odds(k);
    for (auto& o : odds) o = 1.0 + 4.0 * rng.uniform();
    std::vector<double> freq(k, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const double u = rng.uniform();
      std::size_t w = 0;
      for (double acc = p[0]; w + 1 < k && u >= acc; acc += p[++w]) {}
      freq[w] += 1.0 / draws;
    }
    auto growth = [&](const std::vector<double>& b) {
      double g = 0.0;
      for (std::size_t w = 0; w < k; ++w) g += freq[w] * std::log2(odds[w] * b[w]);
      return g;
    };
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    for (int i = 1; i < 100; ++i) {
      if (k == 2) {
        const std::vector<double> b{i / 100.0, (100 - i) / 100.0};
        if (const double g = growth(b); g > best) best = g, arg = b;
        continue;
      }
      for (int j = 1; i + j < 100; ++j) {
        const std::vector<double> b{i / 100.0, j / 100.0, (100 - i - j) / 100.0};
        if (const double g = growth(b); g > best) best = g, arg = b;
      }
    }
    const std::vector<double> kelly_b = kelly_allocation(p, 1.0);
    for (std::size_t w = 0; w < k; ++w) worst_step = std::max(worst_step, std::abs(arg[w] - kelly_b[w]));
  }
  WinningsModel m{{0.5, 0.5}, {2, 2}, symmetric_side_channel(0.2, 2)};
  const double info = side_information_bits(m);
  Rng sim_rng(506);
  const double gain = simulate_kelly(m, 100000, sim_rng).gain();
  const double secs = seconds_since(t0);
  const bool ok = worst_step <= 0.01 + 1e-12 && std::abs(gain - info) <= 0.02 && secs < 120;
  return {ok, "max |grid argmax - b/B| = " + num(worst_step) + " (one step = 0.01); side-info gain " + num(gain) +
                  " vs I(W;Y) " + num(info) + " (tol 0.02); " + num(secs, 3) + " s (< 120)"};
}

// 6 ------------------------------------------------------------------------

std::vector<Symbol> ca_step(int rule, const std::vector<Symbol>& c) {
  const std::size_t w = c.size();
  std::vector<Symbol> n(w);
  for (std::size_t i = 0; i < w; ++i) n[i] = (rule >> (c[(i + w - 1) % w] * 4 + c[i] * 2 + c[(i + 1) % w])) & 1;
  return n;
}

Verdict cellular_automata() {
  const std::size_t w = 64;
  std::vector<Symbol> cells(w, 0);
  cells[w / 2] = 1;
  AgentSpec a = ca_to_mcm(110, w);
  Topology topo = topology(a.graph);
  AgentState s = make_agent_state(a, topo, cells);
  auto rngs = streams(w);
  bool exact = validate_agent(a).ok();
  for (int t = 0; t < 100; ++t) {
    cells = ca_step(110, cells);
    s = run_timestep(a, topo, s, {}, rngs).next;
    exact = exact && s.states == cells;
  }
  Rng gen(606);
  bool forced = true;
  for (int trial = 0; trial < 100; ++trial) {
    StateVec start(w);
    for (auto& x : start) x = static_cast<Symbol>(gen.below(2));
    for (int rule : {0, 204}) {
      AgentSpec ca = ca_to_mcm(rule, w);
      const Topology tp = topology(ca.graph);
      AgentState st = make_agent_state(ca, tp, start);
      st = run_timestep(ca, tp, st, {}, rngs).next;
      forced = forced && st.states == (rule == 0 ? StateVec(w, 0) : start);
    }
  }
  return {exact && forced, std::string("rule 110 x 100 steps ") + (exact ? "bit-identical" : "DIVERGED") +
                               "; rules 0/204 " + (forced ? "forced behaviour holds" : "VIOLATED")};
}

// 7 ------------------------------------------------------------------------

Verdict glauber() {
  const std::array<std::pair<double, double>, 3> cases{{{0.5, 0.5}, {1.0, 0.3}, {0.8, -0.6}}};
  double worst = 0.0;
  std::uint64_t seed = 700;
  const int steps = 100000;
  for (const auto& [beta, h] : cases) {
    GlauberOptions opt;
    opt.beta = beta;
    opt.field = {h};
    const AgentSpec a = glauber_mcm(std::vector<double>{0.0}, 1, opt);
    const Topology topo = topology(a.graph);
    AgentState s = make_agent_state(a, topo, {0});
    auto rngs = streams(1, seed++);
    double m = 0.0;
    for (int t = 0; t < steps; ++t) {
      s = run_timestep(a, topo, s, {}, rngs).next;
      m += spin(s.states[0]);
    }
    worst = std::max(worst, std::abs(m / steps - std::tanh(beta * h)));
  }
  GlauberOptions hot;
  hot.beta = 0.0;
  const AgentSpec a = glauber_mcm(std::vector<double>{0, 1, 1, 0}, 2, hot);
  const Topology topo = topology(a.graph);
  AgentState s = make_agent_state(a, topo, {0, 1});
  auto rngs = streams(2, 799);
  int flips = 0;
  for (int t = 0; t < steps; ++t) {
    const Symbol before = s.states[0];
    s = run_timestep(a, topo, s, {}, rngs).next;
    flips += s.states[0] != before;
  }
  const double freq = flips / static_cast<double>(steps);
  const bool ok = worst <= 0.02 && std::abs(freq - 0.5) <= 0.01;
  return {ok, "max |magnetisation - tanh(beta h)| = " + num(worst) + " (tol 0.02); beta=0 flip frequency " +
                  num(freq) + " (0.5 +- 0.01)"};
}

// 8 ------------------------------------------------------------------------

Verdict phase_transition() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> degrees;
  for (int i = 2; i <= 30; ++i) degrees.push_back(i / 10.0);
  const PhaseSweep sweep = phase_sweep(200, degrees, 100, 3);
  const double secs = seconds_since(t0);
  const bool ok = sweep.crossing >= 0.85 && sweep.crossing <= 1.3 && secs < 60;
  return {ok, "median giant fraction crosses 0.5 at mean degree " + num(sweep.crossing) +
                  " (required [0.85, 1.3]; S = 1 - exp(-cS) puts S = 0.5 at c = 2 ln 2 = " + num(2 * std::log(2.0)) +
                  "); " + num(secs, 3) + " s (< 60)"};
}

// 9 ------------------------------------------------------------------------

Verdict optimizer() {
  const AgentSpec env = binary_identity();
  double optimum = 0.0;
  for (unsigned bits = 0; bits < 16; ++bits) {
    const TableRule t = make_table(RuleDomain{2, {0}, {2}, 2, 0}, [&](const RuleDomain::Key& k) {
      const unsigned row = k.x + 2u * k.tap_values[0];
      return std::optional<MachineOutput>(MachineOutput{static_cast<Symbol>((bits >> row) & 1u), 0});
    });
    optimum = std::max(optimum, mi_exact(single_machine(2, t, {2}), env, BoundaryModel{}));
  }
  ObjectiveSpec obj;
  obj.harvest.mode = HarvestConfig::Mode::mi_exact;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(9000 + seed);
    InnerOptions opt;
    opt.budget = 500;
    const InnerResult r =
        inner_optimize(single_machine(2, identity_ring_rule(1, 0), {2}), env, obj, opt, rng);
    hits += std::abs(r.score - optimum) <= 1e-9;
  }
  return {hits >= 9, "exhaustive table optimum " + num(optimum) + " bit; reached in " + std::to_string(hits) +
                         "/10 seeds (need >= 9)"};
}

// 10 -----------------------------------------------------------------------

Verdict determinism() {
  const fs::path configs = COEVO_CONFIG_DIR;
  const fs::path scratch = fs::temp_directory_path() / ("coevo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  bool identical = true;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(configs))
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  std::string failures;
  for (const std::string& name : names) {
    const RunConfig cfg = load_config(configs / (name + ".json"));
    std::array<std::string, 2> logs, reports;
    for (int rep = 0; rep < 2; ++rep) {
      HarnessOptions opt;
      opt.out = scratch / (name + std::to_string(rep));
      opt.quiet = true;
      if (execute_experiment(cfg, opt) != kExitOk) identical = false, failures += " " + name + "(exit)";
      logs[rep] = slurp(opt.out / "log.jsonl");
      if (analyze_run_dir(opt.out) != kExitOk) identical = false;
      reports[rep] = slurp(opt.out / "detectors.json");
      if (analyze_run_dir(opt.out) != kExitOk || slurp(opt.out / "detectors.json") != reports[rep])
        identical = false, failures += " " + name + "(analyze)";
    }
    if (logs[0].empty() || logs[0] != logs[1] || reports[0] != reports[1])
      identical = false, failures += " " + name;
  }
  fs::remove_all(scratch);
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  return {identical, std::to_string(names.size()) + " presets (" + list + ") replay byte-identical JSONL and detector "
                                                                          "reports" +
                         (failures.empty() ? "" : "; mismatches:" + failures)};
}

// 11 -----------------------------------------------------------------------

std::vector<std::size_t> flagged(const std::vector<bool>& f) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < f.size(); ++t)
    if (f[t]) out.push_back(t);
  return out;
}

Verdict detectors() {
  std::vector<double> doubling, both_g, both_n, super;
  for (int t = 0; t < 8; ++t) {
    doubling.push_back(std::exp2(t));
    both_g.push_back(std::exp2(t));
    both_n.push_back(std::exp2(t));
    super.push_back(std::exp2(static_cast<double>(t * t)));
  }
  const std::vector<double> flat(8, 3.0);
  const auto esc = flagged(detect_escape(doubling, flat, 0.1, 3));
  const auto ctrl = flagged(detect_escape(both_g, both_n, 0.1, 3));
  const auto run = flagged(detect_runaway(super, flat, 0.5, 3));
  const auto run_geo = flagged(detect_runaway(doubling, flat, 0.5, 3));
  const bool ok = esc == std::vector<std::size_t>{3, 4, 5, 6, 7} && ctrl.empty() &&
                  run == std::vector<std::size_t>{4, 5, 6, 7} && run_geo.empty();
  auto show = [](const std::vector<std::size_t>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
  };
  return {ok, "doubling/flat escape " + show(esc) + " (want {3,4,5,6,7}); both-doubling " + show(ctrl) +
                  " (want {}); 2^(t^2) run-away " + show(run) + " (want {4,5,6,7}); geometric run-away " +
                  show(run_geo) + " (want {})"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"MI oracle equivalence", mi_oracle},
      {"Channel limits", channel_limits},
      {"Evolution budget exactness", evolution_budget},
      {"Conservation", conservation},
      {"Kelly", kelly},
      {"CA bit-exactness", cellular_automata},
      {"Glauber statistics", glauber},
      {"Phase transition", phase_transition},
      {"Optimizer sanity", optimizer},
      {"Determinism", determinism},
      {"Escape/run-away detectors", detectors},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
