#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace coevo {

/// splitmix64 finaliser. Used to hash stream coordinates into seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Thin wrapper over mt19937_64. The derived draws are written out explicitly
/// (instead of using std::*_distribution) so streams replay bit-identically
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, one value per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

enum class Purpose : std::uint32_t {
  channel = 1,
  kernel = 2,
  boundary = 3,
  growth = 4,
  optimizer = 5,
  sampler = 6,
};

enum class AgentId : std::uint32_t { society = 0, environment = 1 };

/// Coordinates of one independent random stream.
struct StreamKey {
  std::uint64_t iteration = 0;
  AgentId agent = AgentId::society;
  std::uint32_t machine = 0;
  std::uint64_t replicate = 0;
  Purpose purpose = Purpose::kernel;
};

/// Counter-based seed derivation: every coordinate tuple maps to its own
/// stream, and the same tuple always replays the same stream.
class SeedPlan {
 public:
  explicit SeedPlan(std::uint64_t master = 0) : master_(master) {}

  std::uint64_t master() const { return master_; }

  std::uint64_t derive(const StreamKey& k) const {
    std::uint64_t h = mix64(master_);
    h = mix64(h ^ k.iteration);
    h = mix64(h ^ (static_cast<std::uint64_t>(k.agent) << 32 | k.machine));
    h = mix64(h ^ k.replicate);
    h = mix64(h ^ static_cast<std::uint64_t>(k.purpose));
    return h;
  }

  Rng stream(const StreamKey& k) const { return Rng(derive(k)); }

  // A child plan whose streams are disjoint from this plan's.
  SeedPlan child(std::uint64_t salt) const { return SeedPlan(mix64(master_ ^ mix64(salt + 0x5eed))); }

 private:
  std::uint64_t master_;
};

}  // namespace coevo
