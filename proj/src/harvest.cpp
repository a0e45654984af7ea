#include "coevo/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace coevo {

namespace {

struct FlatOutcome {
  std::size_t index;
  double prob;
};

// Product channel expanded one component at a time, straight into flat indices.
std::vector<FlatOutcome> flat_outcomes(std::size_t source, std::span<const Symbol> source_cards, double sigma) {
  const StateVec x = unflatten(source, source_cards);
  if (sigma <= 0.0) return {{source, 1.0}};
  std::vector<FlatOutcome> out{{0, 1.0}}, next;
  StateVec unit(source_cards.size(), 0);
  for (std::size_t i = 0; i < source_cards.size(); ++i) {
    unit[i] = 1;
    const std::size_t stride = flatten(unit, source_cards);
    unit[i] = 0;
    const Symbol k = source_cards[i];
    const double same = transition_prob(sigma, k, x[i], x[i]);
    const double diff = k > 1 ? transition_prob(sigma, k, x[i], x[i] == 0 ? 1 : 0) : 0.0;
    next.clear();
    next.reserve(out.size() * static_cast<std::size_t>(k));
    for (const FlatOutcome& o : out)
      for (Symbol y = 0; y < k; ++y) {
        const double p = o.prob * (y == x[i] ? same : diff);
        if (p > 0.0) next.push_back({o.index + static_cast<std::size_t>(y) * stride, p});
      }
    out.swap(next);
  }
  return out;
}

// Distribution over the agent's end state: sum_e P(e | source) * table(x, e).
void mix_into(std::vector<double>& acc, const PropagationTable& table, std::size_t x,
              std::span<const FlatOutcome> outcomes, double weight) {
  for (const FlatOutcome& o : outcomes)
    for (const auto& [idx, p] : table.at(x, o.index)) acc[idx] += weight * o.prob * p;
}

std::vector<double> boundary_distribution(const AgentSpec& society, const AgentSpec& environment,
                                          const BoundaryModel& model, const PropagationTable& env_table,
                                          bool parallel) {
  const auto cs = society.cardinalities();
  const auto ce = environment.cardinalities();
  const std::size_t S = joint_size(cs);
  const std::size_t E = joint_size(ce);
  std::vector<double> d(S * E, 0.0);
  switch (model.kind) {
    case BoundaryModel::Kind::point: {
      if (model.society_point.size() != cs.size() || model.environment_point.size() != ce.size())
        throw ContractViolation("point boundary has the wrong length");
      d[flatten(model.society_point, cs) * E + flatten(model.environment_point, ce)] = 1.0;
      break;
    }
    case BoundaryModel::Kind::uniform:
      std::fill(d.begin(), d.end(), 1.0 / static_cast<double>(S * E));
      break;
    case BoundaryModel::Kind::warmup: {
      const PropagationTable soc_table = parallel ? propagation_table(society) : propagation_table_serial(society);
      const double w = 1.0 / static_cast<double>(S * E);
      std::vector<std::vector<FlatOutcome>> soc_obs(E);
      for (std::size_t xe = 0; xe < E; ++xe) soc_obs[xe] = flat_outcomes(xe, ce, society.sigma);
      std::vector<double> ms(S), me(E);
      for (std::size_t xs = 0; xs < S; ++xs) {
        const auto env_obs = flat_outcomes(xs, cs, environment.sigma);
        for (std::size_t xe = 0; xe < E; ++xe) {
          std::fill(ms.begin(), ms.end(), 0.0);
          std::fill(me.begin(), me.end(), 0.0);
          mix_into(ms, soc_table, xs, soc_obs[xe], 1.0);
          mix_into(me, env_table, xe, env_obs, 1.0);
          for (std::size_t a = 0; a < S; ++a) {
            if (ms[a] == 0.0) continue;
            double* row = &d[a * E];
            for (std::size_t b = 0; b < E; ++b) row[b] += w * ms[a] * me[b];
          }
        }
      }
      break;
    }
  }
  return d;
}

void harvest_row(std::size_t a, const std::vector<double>& boundary, const PropagationTable& env_table,
                 std::span<const Symbol> cs, double env_sigma, std::size_t E, std::vector<double>& joint) {
  const double* drow = &boundary[a * E];
  if (std::all_of(drow, drow + E, [](double v) { return v == 0.0; })) return;
  const auto obs = flat_outcomes(a, cs, env_sigma);
  double* jrow = &joint[a * E];
  std::vector<double> acc(E, 0.0);
  for (std::size_t xe = 0; xe < E; ++xe) {
    if (drow[xe] == 0.0) continue;
    mix_into(acc, env_table, xe, obs, drow[xe]);
  }
  for (std::size_t b = 0; b < E; ++b) jrow[b] = acc[b];
}

ExactJoint exact_joint_impl(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                            std::size_t limit, bool parallel) {
  check_flattening_limit(society, environment, limit);
  if (environment.external_cards != society.cardinalities() || society.external_cards != environment.cardinalities())
    throw ContractViolation("agents' external alphabets do not match the other agent's cardinalities");
  const auto cs = society.cardinalities();
  const std::size_t S = joint_size(cs);
  const std::size_t E = joint_size(environment.cardinalities());
  const PropagationTable env_table = parallel ? propagation_table(environment) : propagation_table_serial(environment);
  const std::vector<double> d = boundary_distribution(society, environment, model, env_table, parallel);

  ExactJoint j{S, E, std::vector<double>(S * E, 0.0)};
  if (parallel) {
    const auto rows = static_cast<std::int64_t>(S);
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_threads())
    for (std::int64_t a = 0; a < rows; ++a)
      harvest_row(static_cast<std::size_t>(a), d, env_table, cs, environment.sigma, E, j.p);
  } else {
    for (std::size_t a = 0; a < S; ++a) harvest_row(a, d, env_table, cs, environment.sigma, E, j.p);
  }
  return j;
}

}  // namespace

ExactJoint exact_joint(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                       std::size_t limit) {
  return exact_joint_impl(society, environment, model, limit, true);
}

ExactJoint exact_joint_serial(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                              std::size_t limit) {
  return exact_joint_impl(society, environment, model, limit, false);
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

double mutual_information_bits(std::span<const double> joint, std::size_t rows, std::size_t cols) {
  std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b) {
      pr[a] += joint[a * cols + b];
      pc[b] += joint[a * cols + b];
    }
  double mi = 0.0;
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b) {
      const double p = joint[a * cols + b];
      if (p > 0.0) mi += p * std::log2(p / (pr[a] * pc[b]));
    }
  return std::max(0.0, mi);
}

double mi_exact(const AgentSpec& society, const AgentSpec& environment, const BoundaryModel& model,
                std::size_t limit) {
  const ExactJoint j = exact_joint(society, environment, model, limit);
  return mutual_information_bits(j.p, j.society_size, j.environment_size);
}

double mi_plugin(const JointCounts& counts, bool miller_madow) {
  const double n = static_cast<double>(counts.total());
  if (n < 1.0) throw ContractViolation("mi_plugin needs at least one sample");
  std::map<std::size_t, double> ms, me;
  std::vector<double> joint;
  joint.reserve(counts.counts.size());
  for (const auto& [key, c] : counts.counts) {
    ms[key.first] += static_cast<double>(c) / n;
    me[key.second] += static_cast<double>(c) / n;
    joint.push_back(static_cast<double>(c) / n);
  }
  auto values = [](const std::map<std::size_t, double>& m) {
    std::vector<double> v;
    for (const auto& [k, p] : m) v.push_back(p);
    return v;
  };
  auto correction = [&](std::size_t bins) {
    return miller_madow ? (static_cast<double>(bins) - 1.0) / (2.0 * n * std::log(2.0)) : 0.0;
  };
  const double hs = entropy_bits(values(ms)) + correction(ms.size());
  const double he = entropy_bits(values(me)) + correction(me.size());
  const double hj = entropy_bits(joint) + correction(joint.size());
  return std::max(0.0, hs + he - hj);
}

void check_distribution(std::span<const double> p, const char* what) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ContractViolation(std::string(what) + " has a negative entry");
    s += v;
  }
  if (p.empty() || std::abs(s - 1.0) > 1e-12) throw ContractViolation(std::string(what) + " does not sum to 1");
}

std::vector<double> kelly_allocation(std::span<const double> p, double bankroll) {
  check_distribution(p, "winnings distribution");
  if (!(bankroll > 0.0)) throw ContractViolation("bankroll must be positive");
  std::vector<double> b(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) b[i] = bankroll * p[i];
  return b;
}

std::vector<double> kelly_with_side_info(std::span<const double> posterior, double bankroll) {
  return kelly_allocation(posterior, bankroll);
}

std::vector<double> kelly_posterior(const WinningsModel& model, std::size_t y) {
  std::vector<double> post(model.p.size());
  double z = 0.0;
  for (std::size_t w = 0; w < model.p.size(); ++w) {
    post[w] = model.p[w] * model.side.at(w).at(y);
    z += post[w];
  }
  if (z <= 0.0) throw ContractViolation("side observation has zero probability");
  for (double& v : post) v /= z;
  return post;
}

double kelly_log_return(std::span<const double> odds, std::span<const double> b, std::size_t w) {
  double bank = 0.0;
  for (double v : b) bank += v;
  if (b[w] <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log2(odds[w] * b[w] / bank);
}

double kelly_growth_rate(const WinningsModel& model, std::span<const double> b) {
  check_distribution(model.p, "winnings distribution");
  if (b.size() != model.p.size() || model.odds.size() != model.p.size())
    throw ContractViolation("allocation, odds and distribution lengths differ");
  double g = 0.0;
  for (std::size_t w = 0; w < b.size(); ++w) {
    if (model.p[w] == 0.0) continue;
    const double r = kelly_log_return(model.odds, b, w);
    if (std::isinf(r)) return r;
    g += model.p[w] * r;
  }
  return g;
}

double side_information_bits(const WinningsModel& model) {
  const std::size_t k = model.p.size();
  const std::size_t ny = model.side.at(0).size();
  std::vector<double> joint(k * ny);
  for (std::size_t w = 0; w < k; ++w)
    for (std::size_t y = 0; y < ny; ++y) joint[w * ny + y] = model.p[w] * model.side[w][y];
  return mutual_information_bits(joint, k, ny);
}

std::vector<std::vector<double>> symmetric_side_channel(double sigma, std::size_t k) {
  std::vector<std::vector<double>> m(k, std::vector<double>(k));
  for (std::size_t w = 0; w < k; ++w)
    for (std::size_t y = 0; y < k; ++y)
      m[w][y] = transition_prob(sigma, static_cast<Symbol>(k), static_cast<Symbol>(w), static_cast<Symbol>(y));
  return m;
}

namespace {

std::size_t sample_index(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace

KellySimulation simulate_kelly(const WinningsModel& model, std::uint64_t iterations, Rng& rng) {
  check_distribution(model.p, "winnings distribution");
  const std::vector<double> b0 = kelly_allocation(model.p, 1.0);
  std::vector<std::vector<double>> b_side;
  if (!model.side.empty())
    for (std::size_t y = 0; y < model.side[0].size(); ++y)
      b_side.push_back(kelly_with_side_info(kelly_posterior(model, y), 1.0));
  KellySimulation sim;
  for (std::uint64_t t = 0; t < iterations; ++t) {
    const std::size_t w = sample_index(model.p, rng);
    sim.growth_no_info += kelly_log_return(model.odds, b0, w);
    if (!b_side.empty()) {
      const std::size_t y = sample_index(model.side[w], rng);
      sim.growth_side_info += kelly_log_return(model.odds, b_side[y], w);
    }
  }
  sim.growth_no_info /= static_cast<double>(iterations);
  sim.growth_side_info /= static_cast<double>(iterations);
  return sim;
}

double quantize_energy(double v) { return std::round(v * kEnergyQuantaPerUnit) / kEnergyQuantaPerUnit; }

DepletionResult deplete(double store, double gfer_raw) {
  if (!(store >= 0.0)) throw ContractViolation("store must be nonnegative");
  const double eff = std::clamp(quantize_energy(gfer_raw), 0.0, store);
  return {eff, store - eff};
}

}  // namespace coevo
