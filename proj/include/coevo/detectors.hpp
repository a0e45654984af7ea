#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coevo/core.hpp"
#include "coevo/rng.hpp"

namespace coevo {

/// flag[t] is set when, for the k consecutive iteration pairs (s, s+1) ending
/// at s+1 = t, GFER_{s+1}/GFER_s > (1 + delta) * P_{s+1}/P_s. A pair with a
/// zero GFER or zero proxy has no ratio and breaks the streak.
std::vector<bool> detect_escape(std::span<const double> gfer, std::span<const double> population, double delta,
                                std::size_t k);

/// flag[t] is set when the second difference of log2(GFER/P) exceeds
/// `threshold` at k consecutive iterations ending at t.
std::vector<bool> detect_runaway(std::span<const double> gfer, std::span<const double> population, double threshold,
                                 std::size_t k);

/// Largest weakly connected component size over N (0 for an empty graph).
double giant_component_fraction(const MessageGraph& g);

/// Directed G(n, p) over ordered pairs without self-loops.
MessageGraph directed_erdos_renyi(std::size_t n, double p, Rng& rng);
/// Undirected G(n, p): each unordered pair present with probability p, stored
/// as the single edge (min, max).
MessageGraph undirected_erdos_renyi(std::size_t n, double p, Rng& rng);

struct PhasePoint {
  double mean_degree = 0.0;
  double median_fraction = 0.0;
  double mean_fraction = 0.0;
};

struct PhaseSweep {
  std::size_t n = 0;
  std::size_t seeds = 0;
  std::vector<PhasePoint> points;
  /// First mean degree at which the median fraction reaches 0.5, linearly
  /// interpolated between grid points; negative when it never does.
  double crossing = -1.0;
};

/// Undirected ER giant-component sweep; every (degree, seed) sample has its own
/// counter-based stream, so the OpenMP and serial versions agree exactly.
PhaseSweep phase_sweep(std::size_t n, std::span<const double> mean_degrees, std::size_t seeds,
                       std::uint64_t master_seed);
PhaseSweep phase_sweep_serial(std::size_t n, std::span<const double> mean_degrees, std::size_t seeds,
                              std::uint64_t master_seed);

}  // namespace coevo
