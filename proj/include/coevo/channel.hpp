#pragma once

#include <span>
#include <vector>

#include "coevo/core.hpp"

namespace coevo {

/// Symmetric observation channel: per component, keep the true symbol with
/// probability 1 - sigma, otherwise replace it with a uniform draw over that
/// component's whole alphabet (which may return the true symbol).
struct ObservationChannel {
  double sigma = 0.0;
  std::vector<Symbol> alphabet;
};

/// P(output = j | input = i) for one component with alphabet size k.
double transition_prob(double sigma, Symbol k, Symbol i, Symbol j);

ExternalInput observe(std::span<const Symbol> joint_state, const ObservationChannel& channel, Rng& rng);

/// Mutual information of one component under a uniform input, in bits.
double channel_capacity_bits(double sigma, Symbol k);

/// Every possible channel output with its probability (zero-probability
/// outputs omitted). Used by exact enumeration.
struct ChannelOutcome {
  ExternalInput e;
  double prob = 0.0;
};
std::vector<ChannelOutcome> channel_outcomes(std::span<const Symbol> joint_state, const ObservationChannel& channel);

/// r = 1/sigma with sigma = 0 mapped to r_max.
double precision_from_sigma(double sigma, double r_max);
double sigma_from_precision(double r);
/// Inverse of precision_from_sigma: r at or above r_max is noiseless.
double sigma_from_precision(double r, double r_max);

}  // namespace coevo
