#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "coevo/core.hpp"

namespace coevo {

/// Elementary CA on a periodic ring: one binary machine per cell, parents =
/// left and right neighbours, message = own new state. Inboxes start from the
/// neighbours' states so every timestep is exactly one CA generation.
AgentSpec ca_to_mcm(int rule, std::size_t width, std::size_t tau = 1, std::vector<Symbol> external_cards = {});

/// New cell value of an elementary rule for a (left, self, right) neighbourhood.
Symbol elementary_rule(int rule, Symbol left, Symbol self, Symbol right);

struct MealyMachine {
  Symbol states = 1;
  /// (q, bit, inbox) -> (q', output); the inbox follows `parents` order.
  std::function<MachineOutput(Symbol q, Symbol bit, std::span<const Symbol> inbox)> step;
  std::vector<std::size_t> parents;
};

struct MealyNetwork {
  std::vector<MealyMachine> machines;
  Symbol msg_card = 2;
  /// Number of bits in the external stream; also the counter range.
  std::size_t stream_length = 1;
};

/// Communicating Mealy machines: machine v's state packs (q, n) as q * L + n,
/// where the counter n advances by one per timestep (mod L) and selects which
/// bit of the L-bit external input the machine reads. tau > L would wrap the
/// counter inside an iteration and is rejected with a ValidationFailure.
AgentSpec mealy_mcm(const MealyNetwork& net, std::size_t tau);

Symbol mealy_state(Symbol q, Symbol counter, std::size_t stream_length);
Symbol mealy_control(Symbol state, std::size_t stream_length);
Symbol mealy_counter(Symbol state, std::size_t stream_length);

/// Spin s = 2x - 1 for the binary machine state x.
inline double spin(Symbol x) { return x == 0 ? -1.0 : 1.0; }

/// Probability that a spin with value s flips under synchronous Glauber
/// dynamics with local field h_loc: 1 / (1 + exp(2 beta s h_loc)).
double glauber_flip_probability(double beta, double s, double local_field);

struct GlauberOptions {
  double beta = 1.0;
  /// Constant field per spin (empty = zero field).
  std::vector<double> field;
  /// When set, spin v also feels coupling * s(e_v) from external component v.
  std::optional<double> external_coupling;
  std::vector<Symbol> external_cards;
  std::size_t tau = 1;
};

/// Spin glass with dense symmetric couplings J (row-major n x n, zero
/// diagonal). Edges follow the nonzero couplings in both directions; rules are
/// stochastic kernels whose messages carry the new spin. Throws
/// ValidationFailure for an asymmetric J or a nonzero diagonal.
AgentSpec glauber_mcm(std::span<const double> couplings, std::size_t n, const GlauberOptions& options);

}  // namespace coevo
