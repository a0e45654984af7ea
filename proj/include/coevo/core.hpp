#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coevo/rng.hpp"

namespace coevo {

using Symbol = std::int64_t;
using StateValue = Symbol;
using MessageValue = Symbol;
using StateVec = std::vector<Symbol>;
/// One symbol per machine of the observed agent.
using ExternalInput = std::vector<Symbol>;

/// Raised when a caller breaks an operation's precondition (wrong arity,
/// out-of-range symbol, overflowing store). Mapped to exit code 3 by the CLI.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MachineOutput {
  Symbol state = 0;
  Symbol message = 0;
  friend bool operator==(const MachineOutput&, const MachineOutput&) = default;
};

/// Key space of table and kernel rules: (x, e at the tapped components, inbox).
/// Mixed radix with x least significant, then taps in order, then inbox slots.
struct RuleDomain {
  Symbol state_card = 1;
  std::vector<std::size_t> taps;
  std::vector<Symbol> tap_cards;
  Symbol msg_card = 1;
  std::size_t arity = 0;

  std::size_t size() const;
  std::size_t index(Symbol x, std::span<const Symbol> e, std::span<const Symbol> inbox) const;

  struct Key {
    Symbol x = 0;
    std::vector<Symbol> tap_values;
    std::vector<Symbol> inbox;
  };
  Key decode(std::size_t idx) const;
};

struct TableRule {
  RuleDomain domain;
  std::vector<std::optional<MachineOutput>> rows;
};

struct KernelBranch {
  double prob = 0.0;
  MachineOutput out;
};

/// Stochastic update: each row is a distribution over (x', m). Empty row = undefined.
struct KernelRule {
  RuleDomain domain;
  std::vector<std::vector<KernelBranch>> rows;
};

/// v = (a*x + sum b_j e_j + sum c_k in_k + d) mod n
struct AffineMap {
  Symbol a = 0;
  std::vector<Symbol> b;
  std::vector<Symbol> c;
  Symbol d = 0;
};

/// State output is reduced mod |X_v|, message output mod |M|.
struct LinearRingRule {
  AffineMap state;
  AffineMap message;
};

using UpdateRule = std::variant<TableRule, LinearRingRule, KernelRule>;

enum class MachineRole { generic, ledger, resource_store };

struct LedgerConfig {
  Symbol address_range = 1;
  Symbol symbol_range = 1;
};

struct MachineSpec {
  Symbol cardinality = 1;
  MachineRole role = MachineRole::generic;
  UpdateRule rule = LinearRingRule{};
  LedgerConfig ledger;
  std::string label;
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct MessageGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::size_t fan_out_cap = 0;
};

/// Parents and children of every node, each list sorted ascending.
struct Topology {
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<std::size_t>> children;
};

Topology topology(const MessageGraph& g);
std::size_t max_out_degree(const MessageGraph& g);

enum class InboxInit { zero, parent_state };

struct AgentSpec {
  std::vector<MachineSpec> machines;
  MessageGraph graph;
  std::size_t tau = 1;
  Symbol msg_card = 1;
  double sigma = 0.0;
  std::vector<Symbol> external_cards;
  InboxInit inbox_init = InboxInit::zero;

  std::size_t n() const { return machines.size(); }
  std::vector<Symbol> cardinalities() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  bool mentions(std::string_view needle) const;
  std::string str() const;
};

/// Thrown by constructors that must return a valid agent (adapters, growth).
class ValidationFailure : public std::runtime_error {
 public:
  explicit ValidationFailure(ValidationReport r);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

ValidationReport validate_agent(const AgentSpec& spec);
/// Agent checks plus the identity encoding of E: each side's external
/// alphabet must equal the other side's machine cardinalities.
ValidationReport validate_pair(const AgentSpec& society, const AgentSpec& environment);

/// One machine's action within a timestep. Only kernel rules draw from rng.
MachineOutput step_machine(const MachineSpec& machine, Symbol msg_card, Symbol x, std::span<const Symbol> e,
                           std::span<const Symbol> inbox, Rng& rng);

// Ledger machines ---------------------------------------------------------

struct LedgerOp {
  enum class Kind { noop, write, read };
  Kind kind = Kind::noop;
  Symbol addr = 0;
  Symbol symbol = 0;
};

inline constexpr Symbol kLedgerFill = 0;

/// opcode = m mod 4 (0 noop, 1 write, 2 read), addr = (m div 4) mod A,
/// symbol = m div 4A. Opcode 3 or an out-of-range symbol decodes to noop.
LedgerOp decode_ledger_message(Symbol m, const LedgerConfig& cfg);
Symbol encode_ledger_message(const LedgerOp& op, const LedgerConfig& cfg);

struct LedgerStep {
  std::vector<Symbol> tape;
  Symbol reply = kLedgerFill;
};

LedgerStep apply_ledger_message(std::vector<Symbol> tape, Symbol message, const LedgerConfig& cfg);

// Resource stores -----------------------------------------------------------

struct TransferResult {
  Symbol sender = 0;
  Symbol receiver = 0;
  bool accepted = false;
};

/// Moves `amount` units; an overdraw is rejected and leaves both counts unchanged.
TransferResult apply_resource_transfer(Symbol sender, Symbol receiver, Symbol amount);

// Helpers -------------------------------------------------------------------

inline Symbol mod(Symbol v, Symbol n) {
  const Symbol r = v % n;
  return r < 0 ? r + n : r;
}

/// Product of cardinalities, saturating at SIZE_MAX.
std::size_t joint_size(std::span<const Symbol> cards);
std::size_t flatten(std::span<const Symbol> state, std::span<const Symbol> cards);
StateVec unflatten(std::size_t idx, std::span<const Symbol> cards);

LinearRingRule identity_ring_rule(std::size_t n_external, std::size_t arity);
TableRule make_table(const RuleDomain& domain, auto&& fn) {
  TableRule t{domain, {}};
  t.rows.resize(domain.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i] = fn(domain.decode(i));
  return t;
}

}  // namespace coevo
