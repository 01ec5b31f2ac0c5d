#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdcd/simulate.hpp"

using namespace sdcd;

namespace {

// Two-sided Kolmogorov-Smirnov statistic against N(0, sigma^2).
double ks_statistic(std::vector<double> xs, double sigma) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double cdf = 0.5 * std::erfc(-xs[k] / (sigma * std::sqrt(2.0)));
    worst = std::max({worst, std::abs(cdf - k / n), std::abs((k + 1) / n - cdf)});
  }
  return worst;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(RandomDag, Extremes) {
  EXPECT_EQ(random_dag(8, 0.0, 1).num_edges(), 0u);
  const auto full = random_dag(8, 7.0, 1);
  EXPECT_EQ(full.num_edges(), 28u);
  EXPECT_TRUE(is_acyclic(full));
  EXPECT_THROW(random_dag(5, 5.0, 1), InvalidArgument);
}

TEST(RandomDag, MeanEdgeCount) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) total += static_cast<double>(random_dag(20, 4.0, seed).num_edges());
  EXPECT_NEAR(total / 100.0, 40.0, 5.0);
}

TEST(RandomDag, FuzzAcyclicAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t d = 2 + seed % 30;
    const double s = static_cast<double>(seed % 7) * static_cast<double>(d - 1) / 6.0;
    const auto g = random_dag(d, s, seed);
    EXPECT_TRUE(is_acyclic(g));
    if (seed % 100 == 0) { EXPECT_EQ(g, random_dag(d, s, seed)); }
  }
}

TEST(Mechanisms, RootsHaveZeroMean) {
  const DiGraph g(3, {{0, 2}});
  const auto scm = random_mechanisms(g, 4);
  const std::vector<double> x{5.0, -3.0, 1.0};
  EXPECT_EQ(scm.mechanisms[0].mean(x), 0.0);
  EXPECT_EQ(scm.mechanisms[1].mean(x), 0.0);
}

TEST(Mechanisms, Deterministic) {
  const auto g = random_dag(6, 2.0, 3);
  const auto a = random_mechanisms(g, 10), b = random_mechanisms(g, 10);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(a.mechanisms[j].w_hidden, b.mechanisms[j].w_hidden);
    EXPECT_EQ(a.mechanisms[j].w_out, b.mechanisms[j].w_out);
  }
}

TEST(Mechanisms, SingleParentScalarTrace) {
  const DiGraph g(2, {{0, 1}});
  const auto scm = random_mechanisms(g, 5);
  const auto& m = scm.mechanisms[1];
  ASSERT_EQ(m.parents, std::vector<std::size_t>{0});
  ASSERT_EQ(m.w_hidden.size(), kMechanismHidden);
  const double x0 = 0.37;
  double expected = 0.0;
  for (std::size_t u = 0; u < kMechanismHidden; ++u) expected += m.w_out[u] * std::tanh(m.w_hidden[u] * x0 + m.b_hidden[u]);
  const std::vector<double> x{x0, 99.0};
  EXPECT_NEAR(m.mean(x), expected, 1e-14);
}

TEST(Mechanisms, CyclicGraphRejected) {
  EXPECT_THROW(random_mechanisms(DiGraph(2, {{0, 1}, {1, 0}}), 1), InvalidArgument);
}

TEST(Sample, RowCounts) {
  const auto g = random_dag(10, 4.0, 1);
  const auto scm = random_mechanisms(g, 2);
  const auto obs = sample(scm, 10000, 500, {}, 3);
  EXPECT_EQ(obs.n(), 10000u);
  EXPECT_TRUE(std::all_of(obs.regime.begin(), obs.regime.end(), [](std::size_t r) { return r == 0; }));
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto full = sample(scm, 10000, 500, all, 3);
  EXPECT_EQ(full.n(), 15000u);
  EXPECT_EQ(full.interventions.size(), 11u);
  EXPECT_TRUE(full.interventions[0].empty());
  EXPECT_EQ(full.interventions[4], TargetSet{3});
  full.validate();
}

TEST(Sample, InterventionalRegimeFollowsItsDistribution) {
  const DiGraph g(4, {{0, 2}, {1, 2}, {2, 3}});
  const auto scm = random_mechanisms(g, 7);
  const auto data = sample(scm, 1000, 500, {2}, 8);
  std::vector<double> xs, p0, p1;
  for (std::size_t r = 0; r < data.n(); ++r) {
    if (data.regime[r] != 1) continue;
    xs.push_back(data.x(r, 2));
    p0.push_back(data.x(r, 0));
    p1.push_back(data.x(r, 1));
  }
  ASSERT_EQ(xs.size(), 500u);
  // Critical value for p = 0.01 at n = 500 is about 1.628 / sqrt(n).
  EXPECT_LT(ks_statistic(xs, 0.1), 1.628 / std::sqrt(500.0));
  EXPECT_LT(std::abs(correlation(xs, p0)), 0.15);
  EXPECT_LT(std::abs(correlation(xs, p1)), 0.15);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 500.0;
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  EXPECT_NEAR(std::sqrt(var / 499.0), 0.1, 0.02);
}

TEST(Sample, Deterministic) {
  const auto scm = random_mechanisms(random_dag(6, 2.0, 1), 2);
  const auto a = sample(scm, 200, 50, {1, 4}, 9);
  const auto b = sample(scm, 200, 50, {1, 4}, 9);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.regime, b.regime);
}

TEST(Sample, RegimesAreIndependentStreams) {
  // Adding a regime does not disturb the rows drawn for earlier regimes.
  const auto scm = random_mechanisms(random_dag(5, 2.0, 1), 2);
  const auto a = sample(scm, 100, 20, {1}, 4);
  const auto b = sample(scm, 100, 20, {1, 3}, 4);
  for (std::size_t r = 0; r < a.n(); ++r)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(a.x(r, j), b.x(r, j));
}

TEST(Standardize, MomentsAndIdempotence) {
  const auto scm = random_mechanisms(random_dag(6, 3.0, 2), 3);
  const auto raw = sample(scm, 2000, 100, {0, 5}, 4);
  const auto s = standardize(raw);
  EXPECT_TRUE(s.standardized);
  for (std::size_t j = 0; j < 6; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < s.n(); ++r) m += s.x(r, j);
    m /= static_cast<double>(s.n());
    for (std::size_t r = 0; r < s.n(); ++r) v += (s.x(r, j) - m) * (s.x(r, j) - m);
    v /= static_cast<double>(s.n());
    EXPECT_LT(std::abs(m), 1e-12);
    EXPECT_LT(std::abs(v - 1.0), 1e-10);
  }
  const auto twice = standardize(s);
  for (std::size_t k = 0; k < s.x.size(); ++k) EXPECT_NEAR(twice.x.data()[k], s.x.data()[k], 1e-10);
}

TEST(Standardize, ConstantColumnFlagged) {
  Dataset data;
  data.x = Matrix{{1.0, 3.0}, {2.0, 3.0}, {4.0, 3.0}};
  data.regime.assign(3, 0);
  const auto s = standardize(data);
  EXPECT_EQ(s.constant_columns, std::vector<std::size_t>{1});
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(s.x(r, 1), 0.0);
  Dataset single;
  single.x = Matrix{{1.0}};
  single.regime = {0};
  EXPECT_THROW(standardize(single), InvalidArgument);
}
