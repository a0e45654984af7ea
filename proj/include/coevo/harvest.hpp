#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coevo/engine.hpp"

namespace coevo {

struct HarvestReport {
  double gfer_raw = 0.0;
  double gfer_effective = 0.0;
  /// "exact", "plugin(R)" or "kelly".
  std::string estimator = "exact";
  double store_before = 0.0;
  double store_after = 0.0;
};

/// Dense joint P(X^S_0 = a, X^E_tau = b), row-major [a * environment_size + b].
struct ExactJoint {
  std::size_t society_size = 0;
  std::size_t environment_size = 0;
  std::vector<double> p;
};

/// Exact joint over (X^S_0, X^E_{tau^E}) by enumerating the boundary model,
/// both observation channels and every kernel branch. Rows are computed in
/// parallel; each row is owned by one task so the result is thread-count
/// independent.
ExactJoint exact_joint(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                       std::size_t limit = kDefaultFlatteningLimit);
/// Single-threaded reference for exact_joint.
ExactJoint exact_joint_serial(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                              std::size_t limit = kDefaultFlatteningLimit);

/// I(X^E_{tau^E}; X^S_0) in bits.
double mi_exact(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                std::size_t limit = kDefaultFlatteningLimit);

/// Plug-in estimate H(S) + H(E) - H(S,E) from counts; optional Miller-Madow
/// bias correction on each entropy.
double mi_plugin(const JointCounts& counts, bool miller_madow = false);

double mutual_information_bits(std::span<const double> joint, std::size_t rows, std::size_t cols);
double entropy_bits(std::span<const double> p);

// Kelly gambling ------------------------------------------------------------

struct WinningsModel {
  std::vector<double> p;
  std::vector<double> odds;
  /// Optional side channel, side[w][y] = P(y | w).
  std::vector<std::vector<double>> side;
};

void check_distribution(std::span<const double> p, const char* what);

std::vector<double> kelly_allocation(std::span<const double> p, double bankroll);
std::vector<double> kelly_with_side_info(std::span<const double> posterior, double bankroll);
/// P(w | y) for the model's side channel.
std::vector<double> kelly_posterior(const WinningsModel& model, std::size_t y);
/// sum_w p(w) log2(odds_w * b_w / B); -inf when some p(w) > 0 has b_w = 0.
double kelly_growth_rate(const WinningsModel& model, std::span<const double> b);
/// Realised log2 wealth multiplier for outcome w.
double kelly_log_return(std::span<const double> odds, std::span<const double> b, std::size_t w);
/// I(W; Y) of the side channel under p.
double side_information_bits(const WinningsModel& model);

/// Binary symmetric side channel flipping with probability sigma/2 (the
/// uniform-replacement channel on a binary alphabet).
std::vector<std::vector<double>> symmetric_side_channel(double sigma, std::size_t k);

struct KellySimulation {
  double growth_no_info = 0.0;
  double growth_side_info = 0.0;
  double gain() const { return growth_side_info - growth_no_info; }
};
/// Monte Carlo log-wealth slopes of b = p and b = P(w|y) under common draws.
KellySimulation simulate_kelly(const WinningsModel& model, std::uint64_t iterations, Rng& rng);

// Depletion -----------------------------------------------------------------

struct DepletionResult {
  double gfer_effective = 0.0;
  double store = 0.0;
};

/// Store bookkeeping works on a 2^-32 grid so that sums and differences of
/// stores below 2^20 are exact in double precision.
inline constexpr double kEnergyQuantaPerUnit = 4294967296.0;
double quantize_energy(double v);

/// gfer_effective = min(gfer_raw, store), never negative. gfer_raw is
/// quantised first; a quantised store stays quantised.
DepletionResult deplete(double store, double gfer_raw);

}  // namespace coevo
