#include "coevo/config.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "coevo/adapters.hpp"

namespace coevo {

using json = nlohmann::ordered_json;

ConfigError::ConfigError(ValidationReport r) : std::runtime_error(r.str()), report_(std::move(r)) {}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(ValidationReport{{msg}}); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

MachineRole parse_role(const std::string& s) {
  if (s == "generic") return MachineRole::generic;
  if (s == "ledger") return MachineRole::ledger;
  if (s == "resource_store") return MachineRole::resource_store;
  fail("unknown machine role '" + s + "'");
}

AffineMap parse_affine(const json& j) {
  AffineMap m;
  m.a = get_or<Symbol>(j, "a", 0);
  m.b = get_or<std::vector<Symbol>>(j, "b", {});
  m.c = get_or<std::vector<Symbol>>(j, "c", {});
  m.d = get_or<Symbol>(j, "d", 0);
  return m;
}

RuleDomain parse_domain(const json& j, Symbol state_card, const AgentSpec& agent, std::size_t arity) {
  RuleDomain d;
  d.state_card = state_card;
  d.msg_card = agent.msg_card;
  d.arity = arity;
  d.taps = get_or<std::vector<std::size_t>>(j, "taps", {});
  for (std::size_t t : d.taps) {
    if (t >= agent.external_cards.size()) fail("rule taps external component " + std::to_string(t) + " out of range");
    d.tap_cards.push_back(agent.external_cards[t]);
  }
  return d;
}

UpdateRule parse_rule(const json& j, Symbol state_card, const AgentSpec& agent, std::size_t arity) {
  const std::string type = get_or<std::string>(j, "type", "identity");
  if (type == "identity") return identity_ring_rule(agent.external_cards.size(), arity);
  if (type == "linear_ring") {
    LinearRingRule r;
    if (j.contains("state")) r.state = parse_affine(j.at("state"));
    if (j.contains("message")) r.message = parse_affine(j.at("message"));
    // Missing coefficient vectors default to zeros of the right length.
    for (AffineMap* m : {&r.state, &r.message}) {
      if (m->b.empty()) m->b.assign(agent.external_cards.size(), 0);
      if (m->c.empty()) m->c.assign(arity, 0);
    }
    return r;
  }
  if (type == "table") {
    TableRule t{parse_domain(j, state_card, agent, arity), {}};
    const json& rows = j.at("rows");
    if (rows.size() != t.domain.size())
      fail("table rule has " + std::to_string(rows.size()) + " rows, domain needs " + std::to_string(t.domain.size()));
    for (const auto& r : rows) {
      if (r.is_null())
        t.rows.push_back(std::nullopt);
      else
        t.rows.push_back(MachineOutput{r.at(0).get<Symbol>(), r.at(1).get<Symbol>()});
    }
    return t;
  }
  if (type == "kernel") {
    KernelRule k{parse_domain(j, state_card, agent, arity), {}};
    if (j.contains("iid")) {
      const auto p = j.at("iid").get<std::vector<double>>();
      std::vector<KernelBranch> row;
      for (std::size_t w = 0; w < p.size(); ++w) row.push_back({p[w], {static_cast<Symbol>(w), 0}});
      k.rows.assign(k.domain.size(), row);
      return k;
    }
    const json& rows = j.at("rows");
    if (rows.size() != k.domain.size()) fail("kernel rule row count does not match its domain");
    for (const auto& r : rows) {
      std::vector<KernelBranch> row;
      for (const auto& b : r) row.push_back({b.at(0).get<double>(), {b.at(1).get<Symbol>(), b.at(2).get<Symbol>()}});
      k.rows.push_back(std::move(row));
    }
    return k;
  }
  fail("unknown rule type '" + type + "'");
}

AgentSpec generated_agent(const json& g, const std::vector<Symbol>& observed) {
  const std::string kind = g.at("kind").get<std::string>();
  if (kind == "ca")
    return ca_to_mcm(g.at("rule").get<int>(), g.at("width").get<std::size_t>(), get_or<std::size_t>(g, "tau", 1),
                     observed);
  if (kind == "glauber") {
    const auto rows = g.at("couplings").get<std::vector<std::vector<double>>>();
    std::vector<double> J;
    for (const auto& r : rows) {
      if (r.size() != rows.size()) fail("glauber couplings must be square");
      J.insert(J.end(), r.begin(), r.end());
    }
    GlauberOptions o;
    o.beta = get_or<double>(g, "beta", 1.0);
    o.field = get_or<std::vector<double>>(g, "field", {});
    if (g.contains("external_coupling")) o.external_coupling = g.at("external_coupling").get<double>();
    o.external_cards = observed;
    o.tau = get_or<std::size_t>(g, "tau", 1);
    return glauber_mcm(J, rows.size(), o);
  }
  if (kind == "random_ring") {
    EnvironmentFamily f;
    f.n = g.at("n").get<std::size_t>();
    f.cardinality = get_or<Symbol>(g, "cardinality", 2);
    f.msg_card = get_or<Symbol>(g, "msg_card", 2);
    f.tau = get_or<std::size_t>(g, "tau", 1);
    f.edge_probability = get_or<double>(g, "edge_probability", 0.0);
    f.external_cards = observed;
    Rng rng(get_or<std::uint64_t>(g, "seed", 0));
    return outer_random(f, 1, rng).front();
  }
  fail("unknown agent generator '" + kind + "'");
}

std::vector<Symbol> declared_cards(const json& j) {
  if (j.contains("generator")) return generated_agent(j.at("generator"), {}).cardinalities();
  std::vector<Symbol> cards;
  for (const auto& m : j.at("machines")) cards.push_back(get_or<Symbol>(m, "cardinality", 2));
  return cards;
}

PopulationProxy parse_proxy(const std::string& s) {
  if (s == "n_machines") return PopulationProxy::n_machines;
  if (s == "sum_log2_card") return PopulationProxy::sum_log2_card;
  if (s == "r_environment") return PopulationProxy::r_environment;
  fail("unknown population proxy '" + s + "'");
}

CostFunction parse_cost(const json& j) {
  CostFunction c;
  const std::string f = get_or<std::string>(j, "family", "identity");
  if (f == "identity") {
    c.family = CostFunction::Family::identity;
  } else if (f == "power") {
    c.family = CostFunction::Family::power;
    c.exponent = get_or<double>(j, "exponent", 1.0);
    if (!(c.exponent > 0.0 && c.exponent <= 1.0)) fail("power cost exponent must lie in (0, 1]");
  } else if (f == "logit") {
    c.family = CostFunction::Family::logit;
    c.scale = get_or<double>(j, "scale", 1.0);
    c.ceiling = get_or<double>(j, "ceiling", 1.0);
    if (!(c.scale > 0.0 && c.ceiling > 0.0)) fail("logit cost needs positive scale and ceiling");
  } else {
    fail("unknown cost family '" + f + "'");
  }
  return c;
}

ParamKind param_or_fail(const std::string& name) {
  const auto k = param_from_name(name);
  if (!k) fail("unknown computation parameter '" + name + "'");
  return *k;
}

EvolutionPolicy parse_evolution(const json& j) {
  EvolutionPolicy p;
  p.enabled = get_or<bool>(j, "enabled", true);
  p.kappa = get_or<double>(j, "kappa", 1.0);
  p.r_max = get_or<double>(j, "r_max", 1000.0);
  if (j.contains("allocation")) {
    const json& a = j.at("allocation");
    if (a.is_string()) {
      if (a.get<std::string>() != "uniform") fail("allocation must be 'uniform' or an object");
      p.allocation = AllocationDistribution::uniform();
    } else {
      p.allocation = AllocationDistribution{};
      for (const auto& [k, v] : a.items()) p.allocation.rho[slot(param_or_fail(k))] = v.get<double>();
      if (!p.allocation.valid()) fail("allocation fractions must be nonnegative and sum to 1");
    }
  }
  if (j.contains("costs"))
    for (const auto& [k, v] : j.at("costs").items()) p.costs[slot(param_or_fail(k))] = parse_cost(v);
  if (j.contains("bounds"))
    for (const auto& [k, v] : j.at("bounds").items()) {
      const ParamKind kind = param_or_fail(k);
      ParamBounds b{v.at(0).get<double>(), v.at(1).get<double>()};
      if (is_discrete(kind) && b.floor < 1.0) fail("discrete parameter floors must be at least 1");
      if (b.ceiling < b.floor) fail("bounds for " + k + " have ceiling below floor");
      p.bounds[slot(kind)] = b;
    }
  if (j.contains("growth")) {
    const json& g = j.at("growth");
    const std::string fam = get_or<std::string>(g, "rule_family", "linear_ring");
    if (fam == "linear_ring")
      p.growth.family = GrowthPolicy::RuleFamily::linear_ring;
    else if (fam == "identity")
      p.growth.family = GrowthPolicy::RuleFamily::identity;
    else
      fail("unknown growth rule family '" + fam + "'");
    p.growth.require_connected = get_or<bool>(g, "require_connected", true);
    if (g.contains("guttman"))
      for (const auto& t : g.at("guttman"))
        p.growth.guttman.push_back({get_or<std::string>(t, "label", ""), get_or<double>(t, "unlock_gfer", 0.0),
                                    get_or<Symbol>(t, "cardinality", 0)});
  }
  return p;
}

BoundaryModel parse_boundary(const json& j) {
  BoundaryModel b;
  const std::string kind = get_or<std::string>(j, "kind", "warmup");
  if (kind == "warmup")
    b.kind = BoundaryModel::Kind::warmup;
  else if (kind == "uniform")
    b.kind = BoundaryModel::Kind::uniform;
  else if (kind == "point")
    b.kind = BoundaryModel::Kind::point;
  else
    fail("unknown boundary kind '" + kind + "'");
  b.society_point = get_or<StateVec>(j, "society", {});
  b.environment_point = get_or<StateVec>(j, "environment", {});
  return b;
}

HarvestConfig parse_harvest(const json& j) {
  HarvestConfig h;
  const std::string mode = get_or<std::string>(j, "mode", "mi_exact");
  if (mode == "mi_exact")
    h.mode = HarvestConfig::Mode::mi_exact;
  else if (mode == "mi_plugin")
    h.mode = HarvestConfig::Mode::mi_plugin;
  else if (mode == "kelly")
    h.mode = HarvestConfig::Mode::kelly;
  else
    fail("harvest mode must be exactly one of mi_exact, mi_plugin, kelly");
  h.replicates = get_or<std::uint64_t>(j, "replicates", h.replicates);
  h.miller_madow = get_or<bool>(j, "miller_madow", false);
  if (j.contains("boundary")) h.boundary = parse_boundary(j.at("boundary"));
  h.flattening_limit = get_or<std::size_t>(j, "flattening_limit", kDefaultFlatteningLimit);
  h.scale = get_or<double>(j, "scale", 1.0);
  h.population_gain = get_or<double>(j, "population_gain", 0.0);
  if (j.contains("store")) {
    h.store = j.at("store").get<double>();
    if (*h.store < 0.0) fail("resource store must be nonnegative");
  }
  if (j.contains("kelly")) {
    const json& k = j.at("kelly");
    h.kelly.winnings_machine = get_or<std::size_t>(k, "winnings_machine", 0);
    h.kelly.allocation_machines = get_or<std::vector<std::size_t>>(k, "allocation_machines", {});
    h.kelly.odds = get_or<std::vector<double>>(k, "odds", {});
    for (double o : h.kelly.odds)
      if (!(o > 0.0)) fail("kelly odds must be positive");
  }
  if (h.mode == HarvestConfig::Mode::kelly && h.kelly.odds.size() != h.kelly.allocation_machines.size())
    fail("kelly harvest needs one allocation machine per odds entry");
  return h;
}

std::vector<double> parse_degrees(const json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  const double from = j.at("from").get<double>(), to = j.at("to").get<double>(), step = j.at("step").get<double>();
  if (!(step > 0.0)) fail("degree sweep step must be positive");
  std::vector<double> d;
  for (std::size_t i = 0;; ++i) {
    const double v = from + static_cast<double>(i) * step;
    if (v > to + 1e-9) break;
    d.push_back(v);
  }
  return d;
}

}  // namespace

AgentSpec parse_agent(const json& j, const std::vector<Symbol>& observed_cards) {
  const std::vector<Symbol> ext = j.contains("external_cards") ? j.at("external_cards").get<std::vector<Symbol>>()
                                                               : observed_cards;
  AgentSpec a;
  if (j.contains("generator")) {
    a = generated_agent(j.at("generator"), ext);
  } else {
    a.tau = get_or<std::size_t>(j, "tau", 1);
    a.msg_card = get_or<Symbol>(j, "msg_card", 2);
    a.external_cards = ext;
    const std::string init = get_or<std::string>(j, "inbox_init", "zero");
    if (init == "parent_state")
      a.inbox_init = InboxInit::parent_state;
    else if (init != "zero")
      fail("inbox_init must be 'zero' or 'parent_state'");
    const json& ms = j.at("machines");
    a.graph.n = ms.size();
    for (const auto& e : get_or<std::vector<std::array<std::size_t, 2>>>(j, "edges", {}))
      a.graph.edges.push_back({e[0], e[1]});
    a.graph.fan_out_cap = get_or<std::size_t>(j, "fan_out_cap", ms.size());
    for (const Edge& e : a.graph.edges)
      if (e.from >= a.graph.n || e.to >= a.graph.n) {
        ValidationReport r;
        r.violations.push_back("edge endpoint out of range: (" + std::to_string(e.from) + ", " +
                               std::to_string(e.to) + ")");
        throw ConfigError(r);
      }
    const Topology topo = topology(a.graph);
    for (std::size_t v = 0; v < ms.size(); ++v) {
      const json& m = ms[v];
      MachineSpec spec;
      spec.cardinality = get_or<Symbol>(m, "cardinality", 2);
      spec.role = parse_role(get_or<std::string>(m, "role", "generic"));
      spec.label = get_or<std::string>(m, "label", "");
      if (m.contains("ledger"))
        spec.ledger = {m.at("ledger").at("address_range").get<Symbol>(), m.at("ledger").at("symbol_range").get<Symbol>()};
      spec.rule = parse_rule(m.contains("rule") ? m.at("rule") : json::object(), spec.cardinality, a,
                             topo.parents[v].size());
      a.machines.push_back(std::move(spec));
    }
  }
  if (j.contains("sigma")) a.sigma = j.at("sigma").get<double>();
  if (j.contains("tau") && j.contains("generator")) a.tau = j.at("tau").get<std::size_t>();
  return a;
}

std::string proxy_name(PopulationProxy p) {
  switch (p) {
    case PopulationProxy::n_machines: return "n_machines";
    case PopulationProxy::sum_log2_card: return "sum_log2_card";
    case PopulationProxy::r_environment: return "r_environment";
  }
  return "?";
}

RunConfig parse_config(json doc) {
  RunConfig c;
  try {
    c.name = get_or<std::string>(doc, "name", "run");
    c.scenario = get_or<std::string>(doc, "scenario", "run");
    SimulationConfig& s = c.sim;
    s.seed = get_or<std::uint64_t>(doc, "seed", 0);
    s.iterations = get_or<std::uint64_t>(doc, "iterations", 10);

    if (c.scenario != "phase") {
      const json& sj = doc.at("society");
      const json& ej = doc.at("environment");
      const auto soc_cards = declared_cards(sj);
      const auto env_cards = declared_cards(ej);
      s.society = parse_agent(sj, env_cards);
      s.environment = parse_agent(ej, soc_cards);
      const ValidationReport r = validate_pair(s.society, s.environment);
      if (!r.ok()) throw ConfigError(r);
    }

    if (doc.contains("harvest")) s.harvest = parse_harvest(doc.at("harvest"));
    if (doc.contains("evolution")) {
      s.evolution = parse_evolution(doc.at("evolution"));
    } else {
      s.evolution.enabled = false;
    }
    const std::string sched = get_or<std::string>(doc, "rho_schedule", "fixed");
    if (sched == "fixed")
      s.rho_schedule = RhoSchedule::fixed;
    else if (sched == "per_iteration")
      s.rho_schedule = RhoSchedule::per_iteration;
    else
      fail("rho_schedule must be 'fixed' or 'per_iteration'");
    s.proxy = parse_proxy(get_or<std::string>(doc, "population_proxy", "n_machines"));

    if (doc.contains("initial")) {
      const json& i = doc.at("initial");
      const std::string kind = get_or<std::string>(i, "kind", "point");
      if (kind == "uniform") {
        s.initial.kind = InitialState::Kind::uniform;
      } else if (kind == "point") {
        s.initial.kind = InitialState::Kind::point;
        s.initial.society = get_or<StateVec>(i, "society", StateVec(s.society.n(), 0));
        s.initial.environment = get_or<StateVec>(i, "environment", StateVec(s.environment.n(), 0));
      } else {
        fail("initial.kind must be 'point' or 'uniform'");
      }
    } else {
      s.initial.society.assign(s.society.n(), 0);
      s.initial.environment.assign(s.environment.n(), 0);
    }
    if (c.scenario != "phase") {
      if (s.initial.kind == InitialState::Kind::point &&
          (s.initial.society.size() != s.society.n() || s.initial.environment.size() != s.environment.n()))
        fail("initial point state length does not match the agents");
      for (std::size_t v = 0; v < s.initial.society.size(); ++v)
        if (s.initial.society[v] < 0 || s.initial.society[v] >= s.society.machines[v].cardinality)
          fail("initial society state out of range at machine " + std::to_string(v));
      for (std::size_t v = 0; v < s.initial.environment.size(); ++v)
        if (s.initial.environment[v] < 0 || s.initial.environment[v] >= s.environment.machines[v].cardinality)
          fail("initial environment state out of range at machine " + std::to_string(v));
    }

    if (doc.contains("detectors")) {
      const json& d = doc.at("detectors");
      c.detectors.escape_delta = get_or<double>(d, "escape_delta", c.detectors.escape_delta);
      c.detectors.escape_k = get_or<std::size_t>(d, "escape_k", c.detectors.escape_k);
      c.detectors.runaway_threshold = get_or<double>(d, "runaway_threshold", c.detectors.runaway_threshold);
      c.detectors.runaway_k = get_or<std::size_t>(d, "runaway_k", c.detectors.runaway_k);
    }

    c.objective.harvest = s.harvest;
    c.objective.proxy = s.proxy;
    if (doc.contains("objective")) {
      const json& o = doc.at("objective");
      c.objective.horizon = get_or<std::size_t>(o, "horizon", 1);
      c.objective.discount = get_or<double>(o, "discount", 1.0);
      c.objective.myopic = get_or<bool>(o, "myopic", false);
      if (c.objective.horizon < 1) fail("objective horizon must be at least 1");
      if (c.objective.discount < 0.0 || c.objective.discount > 1.0) fail("objective discount must lie in [0, 1]");
      if (get_or<bool>(o, "evolve", false)) c.objective.evolution = s.evolution;
    }

    if (doc.contains("optimizer")) {
      const json& o = doc.at("optimizer");
      const std::string mode = get_or<std::string>(o, "mode", "inner");
      if (mode == "inner")
        c.optimizer.mode = OptimizerConfig::Mode::inner;
      else if (mode == "random")
        c.optimizer.mode = OptimizerConfig::Mode::random;
      else if (mode == "adversarial")
        c.optimizer.mode = OptimizerConfig::Mode::adversarial;
      else
        fail("optimizer mode must be inner, random or adversarial");
      c.optimizer.inner.budget = get_or<std::size_t>(o, "budget", 500);
      c.optimizer.inner.optimize_edges = get_or<bool>(o, "edges", false);
      c.optimizer.inner.patience = get_or<std::size_t>(o, "patience", 0);
      if (c.optimizer.inner.budget < 1) fail("optimizer budget must be at least 1");
      c.optimizer.adversarial.rounds = get_or<std::size_t>(o, "rounds", 3);
      c.optimizer.adversarial.epsilon = get_or<double>(o, "epsilon", 0.0);
      c.optimizer.adversarial.adversary_budget = get_or<std::size_t>(o, "adversary_budget", 100);
      c.optimizer.adversarial.society = c.optimizer.inner;
      c.optimizer.samples = get_or<std::size_t>(o, "samples", 4);
      if (o.contains("family")) {
        const json& f = o.at("family");
        c.optimizer.family.n = get_or<std::size_t>(f, "n", 1);
        c.optimizer.family.cardinality = get_or<Symbol>(f, "cardinality", 2);
        c.optimizer.family.msg_card = get_or<Symbol>(f, "msg_card", 2);
        c.optimizer.family.tau = get_or<std::size_t>(f, "tau", 1);
        c.optimizer.family.sigma = get_or<double>(f, "sigma", 0.0);
        c.optimizer.family.edge_probability = get_or<double>(f, "edge_probability", 0.0);
      }
      c.optimizer.family.external_cards = s.society.cardinalities();
    }

    if (doc.contains("phase")) {
      const json& p = doc.at("phase");
      c.phase.n = get_or<std::size_t>(p, "n", 200);
      c.phase.seeds = get_or<std::size_t>(p, "seeds", 100);
      if (p.contains("degrees")) c.phase.degrees = parse_degrees(p.at("degrees"));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed config: ") + e.what());
  } catch (const ValidationFailure& f) {
    throw ConfigError(f.report());
  }
  c.source = std::move(doc);
  return c;
}

json load_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(load_config_document(path)); }

}  // namespace coevo
