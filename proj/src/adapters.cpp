#include "coevo/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace coevo {

Symbol elementary_rule(int rule, Symbol left, Symbol self, Symbol right) {
  const int idx = static_cast<int>((left << 2) | (self << 1) | right);
  return (rule >> idx) & 1;
}

AgentSpec ca_to_mcm(int rule, std::size_t width, std::size_t tau, std::vector<Symbol> external_cards) {
  if (rule < 0 || rule > 255) throw ValidationFailure(ValidationReport{{"elementary CA rule must be in [0, 255]"}});
  if (width < 3) throw ValidationFailure(ValidationReport{{"CA width must be at least 3"}});
  AgentSpec a;
  a.tau = tau;
  a.msg_card = 2;
  a.external_cards = std::move(external_cards);
  a.inbox_init = InboxInit::parent_state;
  a.graph = {width, {}, 2};
  for (std::size_t v = 0; v < width; ++v) {
    a.graph.edges.push_back({(v + width - 1) % width, v});
    a.graph.edges.push_back({(v + 1) % width, v});
  }
  std::sort(a.graph.edges.begin(), a.graph.edges.end());
  for (std::size_t v = 0; v < width; ++v) {
    const std::size_t left = (v + width - 1) % width;
    // Parents are sorted, so the left neighbour sits in slot 0 unless it wraps.
    const bool left_first = left < (v + 1) % width;
    RuleDomain d;
    d.state_card = 2;
    d.msg_card = 2;
    d.arity = 2;
    MachineSpec m;
    m.cardinality = 2;
    m.label = "cell" + std::to_string(v);
    m.rule = make_table(d, [&](const RuleDomain::Key& k) {
      const Symbol l = left_first ? k.inbox[0] : k.inbox[1];
      const Symbol r = left_first ? k.inbox[1] : k.inbox[0];
      const Symbol next = elementary_rule(rule, l, k.x, r);
      return std::optional<MachineOutput>(MachineOutput{next, next});
    });
    a.machines.push_back(std::move(m));
  }
  return a;
}

Symbol mealy_state(Symbol q, Symbol counter, std::size_t stream_length) {
  return q * static_cast<Symbol>(stream_length) + counter;
}
Symbol mealy_control(Symbol state, std::size_t stream_length) { return state / static_cast<Symbol>(stream_length); }
Symbol mealy_counter(Symbol state, std::size_t stream_length) { return state % static_cast<Symbol>(stream_length); }

AgentSpec mealy_mcm(const MealyNetwork& net, std::size_t tau) {
  const std::size_t L = net.stream_length;
  if (L == 0) throw ValidationFailure(ValidationReport{{"bit stream must have at least one bit"}});
  if (tau > L)
    throw ValidationFailure(ValidationReport{{"tau = " + std::to_string(tau) + " exceeds the counter range " +
                                              std::to_string(L)}});
  AgentSpec a;
  a.tau = tau;
  a.msg_card = net.msg_card;
  a.external_cards.assign(L, 2);
  a.graph.n = net.machines.size();
  for (std::size_t v = 0; v < net.machines.size(); ++v)
    for (std::size_t p : net.machines[v].parents) a.graph.edges.push_back({p, v});
  std::sort(a.graph.edges.begin(), a.graph.edges.end());
  a.graph.fan_out_cap = std::max<std::size_t>(1, max_out_degree(a.graph));

  const Topology topo = topology(a.graph);
  for (std::size_t v = 0; v < net.machines.size(); ++v) {
    const MealyMachine& mm = net.machines[v];
    // Map the sorted inbox back to the machine's declared parent order.
    std::vector<std::size_t> slot_of(mm.parents.size());
    for (std::size_t i = 0; i < mm.parents.size(); ++i)
      slot_of[i] = static_cast<std::size_t>(
          std::find(topo.parents[v].begin(), topo.parents[v].end(), mm.parents[i]) - topo.parents[v].begin());
    RuleDomain d;
    d.state_card = mm.states * static_cast<Symbol>(L);
    d.msg_card = net.msg_card;
    d.arity = topo.parents[v].size();
    for (std::size_t j = 0; j < L; ++j) {
      d.taps.push_back(j);
      d.tap_cards.push_back(2);
    }
    MachineSpec m;
    m.cardinality = d.state_card;
    m.label = "mealy" + std::to_string(v);
    m.rule = make_table(d, [&](const RuleDomain::Key& k) {
      const Symbol q = mealy_control(k.x, L);
      const Symbol n = mealy_counter(k.x, L);
      std::vector<Symbol> inbox(mm.parents.size());
      for (std::size_t i = 0; i < inbox.size(); ++i) inbox[i] = k.inbox[slot_of[i]];
      const MachineOutput o = mm.step(q, k.tap_values[static_cast<std::size_t>(n)], inbox);
      return std::optional<MachineOutput>(MachineOutput{
          mealy_state(mod(o.state, mm.states), (n + 1) % static_cast<Symbol>(L), L), mod(o.message, net.msg_card)});
    });
    a.machines.push_back(std::move(m));
  }
  return a;
}

double glauber_flip_probability(double beta, double s, double local_field) {
  return 1.0 / (1.0 + std::exp(2.0 * beta * s * local_field));
}

AgentSpec glauber_mcm(std::span<const double> J, std::size_t n, const GlauberOptions& opt) {
  if (J.size() != n * n) throw ValidationFailure(ValidationReport{{"coupling matrix must be n x n"}});
  ValidationReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    if (J[i * n + i] != 0.0) rep.violations.push_back("coupling matrix has a nonzero diagonal at " + std::to_string(i));
    for (std::size_t j = i + 1; j < n; ++j)
      if (J[i * n + j] != J[j * n + i])
        rep.violations.push_back("coupling matrix is not symmetric at (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
  }
  if (!opt.field.empty() && opt.field.size() != n) rep.violations.push_back("field vector must have one entry per spin");
  if (opt.external_coupling && opt.external_cards.size() < n)
    rep.violations.push_back("external coupling needs one external component per spin");
  if (!rep.ok()) throw ValidationFailure(rep);

  AgentSpec a;
  a.tau = opt.tau;
  a.msg_card = 2;
  a.external_cards = opt.external_cards;
  a.inbox_init = InboxInit::parent_state;
  a.graph.n = n;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && J[v * n + u] != 0.0) a.graph.edges.push_back({u, v});
  a.graph.fan_out_cap = std::max<std::size_t>(1, max_out_degree(a.graph));

  const Topology topo = topology(a.graph);
  for (std::size_t v = 0; v < n; ++v) {
    RuleDomain d;
    d.state_card = 2;
    d.msg_card = 2;
    d.arity = topo.parents[v].size();
    if (opt.external_coupling) {
      d.taps.push_back(v);
      d.tap_cards.push_back(opt.external_cards[v]);
    }
    KernelRule k{d, {}};
    k.rows.resize(d.size());
    for (std::size_t i = 0; i < k.rows.size(); ++i) {
      const RuleDomain::Key key = d.decode(i);
      double h = opt.field.empty() ? 0.0 : opt.field[v];
      for (std::size_t p = 0; p < topo.parents[v].size(); ++p) h += J[v * n + topo.parents[v][p]] * spin(key.inbox[p]);
      if (opt.external_coupling) h += *opt.external_coupling * spin(key.tap_values[0] != 0 ? 1 : 0);
      const double flip = glauber_flip_probability(opt.beta, spin(key.x), h);
      const Symbol other = 1 - key.x;
      k.rows[i] = {{1.0 - flip, {key.x, key.x}}, {flip, {other, other}}};
    }
    MachineSpec m;
    m.cardinality = 2;
    m.label = "spin" + std::to_string(v);
    m.rule = std::move(k);
    a.machines.push_back(std::move(m));
  }
  return a;
}

}  // namespace coevo
