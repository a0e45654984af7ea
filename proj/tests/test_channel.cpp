#include <doctest.h>

#include <cmath>
#include <map>

#include "coevo/channel.hpp"

using namespace coevo;

namespace {

// Mutual information of the uniform-input channel from its explicit joint table.
double brute_force_capacity(double sigma, int k) {
  std::vector<std::vector<double>> joint(k, std::vector<double>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) joint[i][j] = (1.0 / k) * ((i == j ? 1.0 - sigma : 0.0) + sigma / k);
  std::vector<double> col(k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) col[j] += joint[i][j];
  double mi = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (joint[i][j] > 0) mi += joint[i][j] * std::log2(joint[i][j] / ((1.0 / k) * col[j]));
  return mi;
}

}  // namespace

TEST_CASE("noiseless observation copies") {
  Rng rng(1);
  for (int c = 0; c < 10000; ++c) {
    const std::size_t n = 1 + rng.below(5);
    ObservationChannel ch{0.0, {}};
    std::vector<Symbol> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      ch.alphabet.push_back(1 + static_cast<Symbol>(rng.below(6)));
      x[i] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(ch.alphabet[i])));
    }
    REQUIRE(observe(x, ch, rng) == x);
  }
}

TEST_CASE("full noise is uniform regardless of input") {
  Rng rng(2);
  const ObservationChannel ch{1.0, {2}};
  for (Symbol input : {0, 1}) {
    int ones = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ones += static_cast<int>(observe(std::vector<Symbol>{input}, ch, rng)[0]);
    CHECK(std::abs(ones / double(draws) - 0.5) <= 0.01);
  }
}

TEST_CASE("half noise keeps the symbol three quarters of the time") {
  Rng rng(3);
  const ObservationChannel ch{0.5, {2}};
  int zeros = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) zeros += observe(std::vector<Symbol>{0}, ch, rng)[0] == 0;
  CHECK(std::abs(zeros / double(draws) - 0.75) <= 0.01);
}

TEST_CASE("capacity limits and brute-force agreement") {
  CHECK(channel_capacity_bits(0.0, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(channel_capacity_bits(1.0, 2)) < 1e-15);
  for (int k : {2, 3, 4})
    for (int s = 1; s <= 9; ++s) {
      const double sigma = s / 10.0;
      CHECK(std::abs(channel_capacity_bits(sigma, k) - brute_force_capacity(sigma, k)) <= 1e-9);
    }
}

TEST_CASE("capacity strictly decreases in sigma") {
  for (int k : {2, 3, 5, 8}) {
    double prev = channel_capacity_bits(0.0, k);
    for (int s = 1; s <= 100; ++s) {
      const double c = channel_capacity_bits(s / 100.0, k);
      CHECK(c < prev);
      prev = c;
    }
  }
}

TEST_CASE("transition probabilities depend only on equality") {
  for (Symbol k : {2, 3, 6})
    for (double sigma : {0.0, 0.3, 1.0}) {
      const double same = transition_prob(sigma, k, 0, 0);
      const double diff = transition_prob(sigma, k, 0, 1);
      double row = 0.0;
      for (Symbol i = 0; i < k; ++i)
        for (Symbol j = 0; j < k; ++j) {
          CHECK(transition_prob(sigma, k, i, j) == (i == j ? same : diff));
          if (i == 0) row += transition_prob(sigma, k, i, j);
        }
      CHECK(row == doctest::Approx(1.0));
    }
}

TEST_CASE("channel outcomes enumerate the product distribution") {
  const ObservationChannel ch{0.3, {2, 3}};
  const std::vector<Symbol> x{1, 2};
  const auto out = channel_outcomes(x, ch);
  double total = 0.0;
  for (const auto& o : out) {
    total += o.prob;
    CHECK(o.prob == doctest::Approx(transition_prob(0.3, 2, 1, o.e[0]) * transition_prob(0.3, 3, 2, o.e[1])));
  }
  CHECK(out.size() == 6);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(channel_outcomes(x, ObservationChannel{0.0, {2, 3}}).size() == 1);
}

TEST_CASE("alphabet mismatch is a contract violation") {
  Rng rng(0);
  CHECK_THROWS_AS(observe(std::vector<Symbol>{0, 1}, ObservationChannel{0.1, {2}}, rng), ContractViolation);
  CHECK_THROWS_AS(observe(std::vector<Symbol>{3}, ObservationChannel{0.1, {2}}, rng), ContractViolation);
}

TEST_CASE("precision conversions") {
  CHECK(precision_from_sigma(0.0, 1e6) == 1e6);
  CHECK(precision_from_sigma(0.25, 1e6) == 4.0);
  CHECK(precision_from_sigma(1e-9, 100.0) == 100.0);
  CHECK(sigma_from_precision(4.0) == 0.25);
  CHECK(sigma_from_precision(0.5) == 1.0);
  CHECK(sigma_from_precision(1e6, 1e6) == 0.0);
  CHECK(sigma_from_precision(4.0, 1e6) == 0.25);
  for (double sigma : {0.0, 0.1, 0.5, 1.0})
    CHECK(sigma_from_precision(precision_from_sigma(sigma, 1e6), 1e6) == doctest::Approx(sigma));
}
