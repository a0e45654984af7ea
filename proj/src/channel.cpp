#include "coevo/channel.hpp"

#include <algorithm>
#include <cmath>

namespace coevo {

double transition_prob(double sigma, Symbol k, Symbol i, Symbol j) {
  const double flat = sigma / static_cast<double>(k);
  return (i == j ? 1.0 - sigma : 0.0) + flat;
}

ExternalInput observe(std::span<const Symbol> joint_state, const ObservationChannel& channel, Rng& rng) {
  if (joint_state.size() != channel.alphabet.size())
    throw ContractViolation("channel alphabet does not match observed agent");
  ExternalInput e(joint_state.begin(), joint_state.end());
  if (channel.sigma <= 0.0) return e;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Symbol k = channel.alphabet[i];
    if (e[i] < 0 || e[i] >= k) throw ContractViolation("observed symbol outside its alphabet");
    if (rng.uniform() < channel.sigma) e[i] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(k)));
  }
  return e;
}

double channel_capacity_bits(double sigma, Symbol k) {
  const double kd = static_cast<double>(k);
  const double stay = 1.0 - sigma + sigma / kd;
  const double move = sigma / kd;
  double h_out_given_in = 0.0;
  if (stay > 0.0) h_out_given_in -= stay * std::log2(stay);
  if (move > 0.0) h_out_given_in -= (kd - 1.0) * move * std::log2(move);
  // Uniform input gives uniform output by symmetry.
  return std::log2(kd) - h_out_given_in;
}

std::vector<ChannelOutcome> channel_outcomes(std::span<const Symbol> joint_state, const ObservationChannel& channel) {
  if (joint_state.size() != channel.alphabet.size())
    throw ContractViolation("channel alphabet does not match observed agent");
  std::vector<ChannelOutcome> out;
  if (channel.sigma <= 0.0) {
    out.push_back({ExternalInput(joint_state.begin(), joint_state.end()), 1.0});
    return out;
  }
  const std::size_t n = joint_state.size();
  ExternalInput e(n, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t i = 0; i < n && p > 0.0; ++i) p *= transition_prob(channel.sigma, channel.alphabet[i], joint_state[i], e[i]);
    if (p > 0.0) out.push_back({e, p});
    std::size_t i = 0;
    while (i < n && ++e[i] == channel.alphabet[i]) e[i++] = 0;
    if (i == n) break;
  }
  return out;
}

double precision_from_sigma(double sigma, double r_max) {
  if (sigma <= 0.0) return r_max;
  return std::min(1.0 / sigma, r_max);
}

double sigma_from_precision(double r) { return r <= 0.0 ? 1.0 : std::min(1.0, 1.0 / r); }

double sigma_from_precision(double r, double r_max) { return r >= r_max ? 0.0 : sigma_from_precision(r); }

}  // namespace coevo
