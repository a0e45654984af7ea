#include "coevo/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace coevo {

std::size_t RuleDomain::size() const {
  std::size_t s = static_cast<std::size_t>(state_card);
  for (Symbol c : tap_cards) s *= static_cast<std::size_t>(c);
  for (std::size_t k = 0; k < arity; ++k) s *= static_cast<std::size_t>(msg_card);
  return s;
}

std::size_t RuleDomain::index(Symbol x, std::span<const Symbol> e, std::span<const Symbol> inbox) const {
  if (x < 0 || x >= state_card) throw ContractViolation("state symbol outside rule domain");
  if (inbox.size() != arity) throw ContractViolation("inbox arity mismatch");
  std::size_t idx = 0;
  std::size_t radix = 1;
  auto push = [&](Symbol v, Symbol card) {
    if (v < 0 || v >= card) throw ContractViolation("symbol outside rule domain");
    idx += static_cast<std::size_t>(v) * radix;
    radix *= static_cast<std::size_t>(card);
  };
  push(x, state_card);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (taps[i] >= e.size()) throw ContractViolation("external input shorter than rule tap");
    push(e[taps[i]], tap_cards[i]);
  }
  for (Symbol m : inbox) push(m, msg_card);
  return idx;
}

RuleDomain::Key RuleDomain::decode(std::size_t idx) const {
  Key k;
  k.x = static_cast<Symbol>(idx % static_cast<std::size_t>(state_card));
  idx /= static_cast<std::size_t>(state_card);
  k.tap_values.resize(taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) {
    k.tap_values[i] = static_cast<Symbol>(idx % static_cast<std::size_t>(tap_cards[i]));
    idx /= static_cast<std::size_t>(tap_cards[i]);
  }
  k.inbox.resize(arity);
  for (std::size_t i = 0; i < arity; ++i) {
    k.inbox[i] = static_cast<Symbol>(idx % static_cast<std::size_t>(msg_card));
    idx /= static_cast<std::size_t>(msg_card);
  }
  return k;
}

Topology topology(const MessageGraph& g) {
  Topology t;
  t.parents.resize(g.n);
  t.children.resize(g.n);
  for (const Edge& e : g.edges) {
    if (e.from >= g.n || e.to >= g.n) continue;
    t.parents[e.to].push_back(e.from);
    t.children[e.from].push_back(e.to);
  }
  for (auto& p : t.parents) std::sort(p.begin(), p.end());
  for (auto& c : t.children) std::sort(c.begin(), c.end());
  return t;
}

std::size_t max_out_degree(const MessageGraph& g) {
  std::vector<std::size_t> deg(g.n, 0);
  for (const Edge& e : g.edges)
    if (e.from < g.n) ++deg[e.from];
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

std::vector<Symbol> AgentSpec::cardinalities() const {
  std::vector<Symbol> c;
  c.reserve(machines.size());
  for (const auto& m : machines) c.push_back(m.cardinality);
  return c;
}

bool ValidationReport::mentions(std::string_view needle) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

std::string ValidationReport::str() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) os << (i ? "\n" : "") << violations[i];
  return os.str();
}

ValidationFailure::ValidationFailure(ValidationReport r)
    : std::runtime_error("validation failed: " + r.str()), report_(std::move(r)) {}

namespace {

void check_domain(const RuleDomain& d, const MachineSpec& m, const AgentSpec& a, std::size_t arity,
                  const std::string& where, std::vector<std::string>& out) {
  if (d.state_card != m.cardinality) out.push_back(where + ": rule state domain differs from machine cardinality");
  if (d.msg_card != a.msg_card) out.push_back(where + ": rule message domain differs from |M|");
  if (d.arity != arity) out.push_back(where + ": rule parent arity differs from |pa(v)|");
  if (d.taps.size() != d.tap_cards.size()) {
    out.push_back(where + ": tap list and tap cardinalities differ in length");
    return;
  }
  for (std::size_t i = 0; i < d.taps.size(); ++i) {
    if (d.taps[i] >= a.external_cards.size())
      out.push_back(where + ": rule tap beyond external input length");
    else if (d.tap_cards[i] != a.external_cards[d.taps[i]])
      out.push_back(where + ": rule tap cardinality differs from external alphabet");
  }
}

void check_output(const MachineOutput& o, const MachineSpec& m, const AgentSpec& a, const std::string& where,
                  std::vector<std::string>& out, bool& reported) {
  if (reported) return;
  if (o.state < 0 || o.state >= m.cardinality || o.message < 0 || o.message >= a.msg_card) {
    out.push_back(where + ": rule output outside state or message space");
    reported = true;
  }
}

}  // namespace

ValidationReport validate_agent(const AgentSpec& a) {
  ValidationReport r;
  auto& out = r.violations;
  if (a.tau < 1) out.push_back("tau must be >= 1");
  if (a.msg_card < 1) out.push_back("message space must have |M| >= 1");
  if (!(a.sigma >= 0.0 && a.sigma <= 1.0)) out.push_back("sigma outside [0, 1]");
  for (Symbol c : a.external_cards)
    if (c < 1) out.push_back("external alphabet with cardinality < 1");
  if (a.graph.n != a.machines.size()) out.push_back("graph node count differs from machine count");

  const std::size_t n = a.graph.n;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  bool endpoint_bad = false;
  for (const Edge& e : a.graph.edges) {
    if (e.from >= n || e.to >= n) {
      if (!endpoint_bad) out.push_back("edge endpoint out of range");
      endpoint_bad = true;
      continue;
    }
    if (!seen.insert({e.from, e.to}).second) out.push_back("duplicate edge");
  }
  if (max_out_degree(a.graph) > a.graph.fan_out_cap) out.push_back("out-degree exceeds fan-out cap D");
  if (endpoint_bad || a.graph.n != a.machines.size()) return r;

  const Topology topo = topology(a.graph);
  for (std::size_t v = 0; v < a.machines.size(); ++v) {
    const MachineSpec& m = a.machines[v];
    const std::string where = "machine " + std::to_string(v);
    if (m.cardinality < 1) {
      out.push_back(where + ": cardinality < 1");
      continue;
    }
    const std::size_t arity = topo.parents[v].size();
    if (m.role == MachineRole::ledger) {
      const LedgerConfig& lc = m.ledger;
      if (lc.address_range < 1 || lc.symbol_range < 1) out.push_back(where + ": ledger ranges must be >= 1");
      if (lc.symbol_range > a.msg_card) out.push_back(where + ": ledger symbols do not fit in |M|");
      if (a.msg_card < 4 * lc.address_range * lc.symbol_range)
        out.push_back(where + ": |M| too small for ledger encoding (needs 4*A*S)");
      continue;
    }
    if (m.role == MachineRole::resource_store && topo.children[v].size() > 1)
      out.push_back(where + ": resource store with more than one child would duplicate goods");

    bool reported = false;
    if (const auto* t = std::get_if<TableRule>(&m.rule)) {
      check_domain(t->domain, m, a, arity, where, out);
      if (t->rows.size() != t->domain.size() ||
          std::any_of(t->rows.begin(), t->rows.end(), [](const auto& row) { return !row.has_value(); })) {
        out.push_back(where + ": update rule not total");
      } else {
        for (const auto& row : t->rows) check_output(*row, m, a, where, out, reported);
      }
    } else if (const auto* k = std::get_if<KernelRule>(&m.rule)) {
      check_domain(k->domain, m, a, arity, where, out);
      if (k->rows.size() != k->domain.size() ||
          std::any_of(k->rows.begin(), k->rows.end(), [](const auto& row) { return row.empty(); })) {
        out.push_back(where + ": update rule not total");
      } else {
        bool sum_bad = false;
        for (const auto& row : k->rows) {
          double s = 0.0;
          for (const auto& br : row) {
            if (br.prob < 0.0 && !sum_bad) {
              out.push_back(where + ": negative kernel probability");
              sum_bad = true;
            }
            s += br.prob;
            check_output(br.out, m, a, where, out, reported);
          }
          if (std::abs(s - 1.0) > 1e-12 && !sum_bad) {
            out.push_back(where + ": kernel row does not sum to 1");
            sum_bad = true;
          }
        }
      }
    } else {
      const auto& lr = std::get<LinearRingRule>(m.rule);
      for (const AffineMap* am : {&lr.state, &lr.message}) {
        if (am->b.size() != a.external_cards.size())
          out.push_back(where + ": linear rule external coefficients differ from external input length");
        if (am->c.size() != arity) out.push_back(where + ": linear rule parent coefficients differ from |pa(v)|");
      }
    }
  }
  return r;
}

ValidationReport validate_pair(const AgentSpec& society, const AgentSpec& environment) {
  ValidationReport r;
  for (auto& v : validate_agent(society).violations) r.violations.push_back("society: " + v);
  for (auto& v : validate_agent(environment).violations) r.violations.push_back("environment: " + v);
  if (society.external_cards != environment.cardinalities())
    r.violations.push_back("society external alphabet differs from environment cardinalities");
  if (environment.external_cards != society.cardinalities())
    r.violations.push_back("environment external alphabet differs from society cardinalities");
  return r;
}

namespace {

Symbol eval_affine(const AffineMap& am, Symbol x, std::span<const Symbol> e, std::span<const Symbol> inbox,
                   Symbol n) {
  if (am.b.size() != e.size()) throw ContractViolation("external input length mismatch for linear rule");
  if (am.c.size() != inbox.size()) throw ContractViolation("inbox arity mismatch");
  Symbol acc = mod(am.a, n) * mod(x, n) % n;
  for (std::size_t j = 0; j < e.size(); ++j) acc = (acc + mod(am.b[j], n) * mod(e[j], n)) % n;
  for (std::size_t k = 0; k < inbox.size(); ++k) acc = (acc + mod(am.c[k], n) * mod(inbox[k], n)) % n;
  return (acc + mod(am.d, n)) % n;
}

}  // namespace

MachineOutput step_machine(const MachineSpec& machine, Symbol msg_card, Symbol x, std::span<const Symbol> e,
                           std::span<const Symbol> inbox, Rng& rng) {
  if (machine.role == MachineRole::ledger)
    throw ContractViolation("ledger machines are stepped through apply_ledger_message");
  if (x < 0 || x >= machine.cardinality) throw ContractViolation("state symbol out of range");
  return std::visit(
      [&](const auto& rule) -> MachineOutput {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, LinearRingRule>) {
          return {eval_affine(rule.state, x, e, inbox, machine.cardinality),
                  eval_affine(rule.message, x, e, inbox, msg_card)};
        } else if constexpr (std::is_same_v<R, TableRule>) {
          const auto& row = rule.rows.at(rule.domain.index(x, e, inbox));
          if (!row) throw ContractViolation("table rule has no row for this input");
          return *row;
        } else {
          const auto& row = rule.rows.at(rule.domain.index(x, e, inbox));
          if (row.empty()) throw ContractViolation("kernel rule has no row for this input");
          const double u = rng.uniform();
          double acc = 0.0;
          for (const auto& br : row) {
            acc += br.prob;
            if (u < acc) return br.out;
          }
          return row.back().out;
        }
      },
      machine.rule);
}

LedgerOp decode_ledger_message(Symbol m, const LedgerConfig& cfg) {
  LedgerOp op;
  if (m < 0) return op;
  const Symbol code = m % 4;
  const Symbol addr = (m / 4) % cfg.address_range;
  const Symbol symbol = m / (4 * cfg.address_range);
  if (code == 1 && symbol < cfg.symbol_range) {
    op.kind = LedgerOp::Kind::write;
    op.addr = addr;
    op.symbol = symbol;
  } else if (code == 2) {
    op.kind = LedgerOp::Kind::read;
    op.addr = addr;
  }
  return op;
}

Symbol encode_ledger_message(const LedgerOp& op, const LedgerConfig& cfg) {
  switch (op.kind) {
    case LedgerOp::Kind::write:
      return 1 + 4 * op.addr + 4 * cfg.address_range * op.symbol;
    case LedgerOp::Kind::read:
      return 2 + 4 * op.addr;
    case LedgerOp::Kind::noop:
      break;
  }
  return 0;
}

LedgerStep apply_ledger_message(std::vector<Symbol> tape, Symbol message, const LedgerConfig& cfg) {
  const LedgerOp op = decode_ledger_message(message, cfg);
  LedgerStep out;
  const auto addr = static_cast<std::size_t>(op.addr);
  if (op.kind == LedgerOp::Kind::write) {
    if (addr >= tape.size()) tape.resize(addr + 1, kLedgerFill);
    tape[addr] = op.symbol;
  } else if (op.kind == LedgerOp::Kind::read) {
    out.reply = addr < tape.size() ? tape[addr] : kLedgerFill;
  }
  out.tape = std::move(tape);
  return out;
}

TransferResult apply_resource_transfer(Symbol sender, Symbol receiver, Symbol amount) {
  if (amount < 0 || sender < amount) return {sender, receiver, false};
  return {sender - amount, receiver + amount, true};
}

std::size_t joint_size(std::span<const Symbol> cards) {
  std::size_t s = 1;
  for (Symbol c : cards) {
    const auto uc = static_cast<std::size_t>(c);
    if (uc != 0 && s > std::numeric_limits<std::size_t>::max() / uc) return std::numeric_limits<std::size_t>::max();
    s *= uc;
  }
  return s;
}

std::size_t flatten(std::span<const Symbol> state, std::span<const Symbol> cards) {
  std::size_t idx = 0;
  std::size_t radix = 1;
  for (std::size_t i = 0; i < state.size(); ++i) {
    idx += static_cast<std::size_t>(state[i]) * radix;
    radix *= static_cast<std::size_t>(cards[i]);
  }
  return idx;
}

StateVec unflatten(std::size_t idx, std::span<const Symbol> cards) {
  StateVec s(cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) {
    s[i] = static_cast<Symbol>(idx % static_cast<std::size_t>(cards[i]));
    idx /= static_cast<std::size_t>(cards[i]);
  }
  return s;
}

LinearRingRule identity_ring_rule(std::size_t n_external, std::size_t arity) {
  LinearRingRule r;
  r.state.a = 1;
  r.state.b.assign(n_external, 0);
  r.state.c.assign(arity, 0);
  r.message.b.assign(n_external, 0);
  r.message.c.assign(arity, 0);
  return r;
}

}  // namespace coevo
