#include "coevo/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coevo/engine.hpp"

namespace coevo {

namespace {

void check_lengths(std::span<const double> gfer, std::span<const double> population) {
  if (gfer.size() != population.size()) throw ContractViolation("GFER and population series differ in length");
}

std::vector<bool> streak_flags(const std::vector<int>& cond, std::size_t offset, std::size_t n, std::size_t k) {
  // cond[i] applies to iteration i + offset; -1 = undefined (breaks the streak).
  std::vector<bool> flags(n, false);
  std::size_t run = 0;
  for (std::size_t i = 0; i < cond.size(); ++i) {
    run = cond[i] == 1 ? run + 1 : 0;
    if (k > 0 && run >= k) flags[i + offset] = true;
  }
  return flags;
}

}  // namespace

std::vector<bool> detect_escape(std::span<const double> gfer, std::span<const double> population, double delta,
                                std::size_t k) {
  check_lengths(gfer, population);
  const std::size_t n = gfer.size();
  if (n < 2) return std::vector<bool>(n, false);
  std::vector<int> cond(n - 1, 0);
  for (std::size_t s = 0; s + 1 < n; ++s) {
    if (gfer[s] <= 0.0 || gfer[s + 1] <= 0.0 || population[s] <= 0.0 || population[s + 1] <= 0.0) {
      cond[s] = -1;
      continue;
    }
    cond[s] = gfer[s + 1] / gfer[s] > (1.0 + delta) * (population[s + 1] / population[s]) ? 1 : 0;
  }
  return streak_flags(cond, 1, n, k);
}

std::vector<bool> detect_runaway(std::span<const double> gfer, std::span<const double> population, double threshold,
                                 std::size_t k) {
  check_lengths(gfer, population);
  const std::size_t n = gfer.size();
  if (n < 3) return std::vector<bool>(n, false);
  std::vector<double> level(n, 0.0);
  std::vector<bool> defined(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    defined[t] = gfer[t] > 0.0 && population[t] > 0.0;
    if (defined[t]) level[t] = std::log2(gfer[t] / population[t]);
  }
  std::vector<int> cond(n - 2, 0);
  for (std::size_t t = 2; t < n; ++t) {
    if (!defined[t] || !defined[t - 1] || !defined[t - 2]) {
      cond[t - 2] = -1;
      continue;
    }
    cond[t - 2] = level[t] - 2.0 * level[t - 1] + level[t - 2] > threshold ? 1 : 0;
  }
  return streak_flags(cond, 2, n, k);
}

double giant_component_fraction(const MessageGraph& g) {
  if (g.n == 0) return 0.0;
  std::vector<std::size_t> parent(g.n), size(g.n, 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const Edge& e : g.edges) {
    std::size_t a = find(e.from), b = find(e.to);
    if (a == b) continue;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
  std::size_t best = 0;
  for (std::size_t v = 0; v < g.n; ++v)
    if (find(v) == v) best = std::max(best, size[v]);
  return static_cast<double>(best) / static_cast<double>(g.n);
}

MessageGraph directed_erdos_renyi(std::size_t n, double p, Rng& rng) {
  MessageGraph g{n, {}, n == 0 ? 0 : n - 1};
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && rng.uniform() < p) g.edges.push_back({u, v});
  return g;
}

MessageGraph undirected_erdos_renyi(std::size_t n, double p, Rng& rng) {
  MessageGraph g{n, {}, n == 0 ? 0 : n - 1};
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.uniform() < p) g.edges.push_back({u, v});
  return g;
}

namespace {

double sample_fraction(std::size_t n, double mean_degree, std::size_t point, std::size_t seed,
                       std::uint64_t master) {
  const SeedPlan plan(master);
  Rng rng = plan.stream({point, AgentId::society, 0, seed, Purpose::sampler});
  const double p = n > 1 ? std::min(1.0, mean_degree / static_cast<double>(n - 1)) : 0.0;
  return giant_component_fraction(undirected_erdos_renyi(n, p, rng));
}

PhaseSweep summarise(std::size_t n, std::span<const double> degrees, std::size_t seeds,
                     const std::vector<double>& fractions) {
  PhaseSweep out;
  out.n = n;
  out.seeds = seeds;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    std::vector<double> f(fractions.begin() + static_cast<std::ptrdiff_t>(i * seeds),
                          fractions.begin() + static_cast<std::ptrdiff_t>((i + 1) * seeds));
    std::sort(f.begin(), f.end());
    PhasePoint pt;
    pt.mean_degree = degrees[i];
    if (!f.empty()) {
      const std::size_t m = f.size() / 2;
      pt.median_fraction = f.size() % 2 == 1 ? f[m] : 0.5 * (f[m - 1] + f[m]);
      pt.mean_fraction = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    }
    out.points.push_back(pt);
  }
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const PhasePoint& b = out.points[i];
    if (b.median_fraction < 0.5) continue;
    if (i == 0) {
      out.crossing = b.mean_degree;
    } else {
      const PhasePoint& a = out.points[i - 1];
      const double w = (0.5 - a.median_fraction) / (b.median_fraction - a.median_fraction);
      out.crossing = a.mean_degree + w * (b.mean_degree - a.mean_degree);
    }
    break;
  }
  return out;
}

}  // namespace

PhaseSweep phase_sweep(std::size_t n, std::span<const double> mean_degrees, std::size_t seeds,
                       std::uint64_t master_seed) {
  const std::size_t total = mean_degrees.size() * seeds;
  std::vector<double> fractions(total, 0.0);
  const auto count = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(dynamic, 4) num_threads(worker_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    fractions[idx] = sample_fraction(n, mean_degrees[idx / seeds], idx / seeds, idx % seeds, master_seed);
  }
  return summarise(n, mean_degrees, seeds, fractions);
}

PhaseSweep phase_sweep_serial(std::size_t n, std::span<const double> mean_degrees, std::size_t seeds,
                              std::uint64_t master_seed) {
  std::vector<double> fractions;
  fractions.reserve(mean_degrees.size() * seeds);
  for (std::size_t i = 0; i < mean_degrees.size(); ++i)
    for (std::size_t s = 0; s < seeds; ++s) fractions.push_back(sample_fraction(n, mean_degrees[i], i, s, master_seed));
  return summarise(n, mean_degrees, seeds, fractions);
}

}  // namespace coevo
