#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sdcd/metrics.hpp"
#include "sdcd/simulate.hpp"

using namespace sdcd;

namespace {

DiGraph random_digraph(std::size_t d, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  DiGraph g(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && coin(rng)) g.add_edge(i, j);
  return g;
}

}  // namespace

TEST(Shd, Examples) {
  const DiGraph g(4, {{0, 1}, {1, 2}, {3, 2}});
  EXPECT_EQ(shd(g, g), 0u);
  EXPECT_EQ(shd(DiGraph(2, {{1, 0}}), DiGraph(2, {{0, 1}})), 1u);
  EXPECT_EQ(shd(DiGraph(4), g), 3u);
}

TEST(Shd, BidirectedPairAgainstSingleEdge) {
  EXPECT_EQ(shd(DiGraph(2, {{0, 1}, {1, 0}}), DiGraph(2, {{0, 1}})), 1u);
}

TEST(Shd, SizeMismatchThrows) { EXPECT_THROW(shd(DiGraph(2), DiGraph(3)), DimensionError); }

TEST(Shd, SymmetricAndTriangle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_digraph(6, 0.3, rng), b = random_digraph(6, 0.3, rng), c = random_digraph(6, 0.3, rng);
    EXPECT_EQ(shd(a, b), shd(b, a));
    EXPECT_LE(shd(a, b), shd(a, c) + shd(c, b));
    EXPECT_EQ(shd(a, b) == 0, a == b);
  }
}

TEST(PrecisionRecall, Examples) {
  const DiGraph g(3, {{0, 1}, {1, 2}});
  const auto same = precision_recall_f1(g, g);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);

  const auto half = precision_recall_f1(DiGraph(3, {{0, 1}, {1, 2}}), DiGraph(3, {{0, 1}, {2, 1}}));
  EXPECT_EQ(half.precision, 0.5);
  EXPECT_EQ(half.recall, 0.5);
  EXPECT_EQ(half.f1, 0.5);

  const auto empty = precision_recall_f1(DiGraph(3), g);
  EXPECT_EQ(empty.precision, 0.0);
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.f1, 0.0);

  const auto both_empty = precision_recall_f1(DiGraph(3), DiGraph(3));
  EXPECT_EQ(both_empty.precision, 1.0);
  EXPECT_EQ(both_empty.recall, 1.0);
}

TEST(PrecisionRecall, CountsAreIntegral) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_digraph(5, 0.3, rng), g = random_digraph(5, 0.3, rng);
    const auto r = precision_recall_f1(p, g);
    const double hp = r.precision * static_cast<double>(p.num_edges());
    const double hr = r.recall * static_cast<double>(g.num_edges());
    if (p.num_edges() > 0) { EXPECT_NEAR(hp, std::round(hp), 1e-12); }
    if (g.num_edges() > 0) { EXPECT_NEAR(hr, std::round(hr), 1e-12); }
    if (r.precision + r.recall > 0)
      EXPECT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-15);
    else
      EXPECT_EQ(r.f1, 0.0);
  }
}

TEST(ShdCpdag, Examples) {
  const DiGraph chain(3, {{0, 1}, {1, 2}});
  const DiGraph reversed(3, {{2, 1}, {1, 0}});
  EXPECT_EQ(shd_cpdag(chain, reversed), 0u);
  EXPECT_EQ(shd(chain, reversed), 2u);
  EXPECT_EQ(shd_cpdag(chain, chain), 0u);
  EXPECT_GE(shd_cpdag(DiGraph(3, {{0, 2}, {1, 2}}), DiGraph(3, {{0, 2}, {2, 1}})), 1u);
}

TEST(ShdCpdag, CyclicInputThrows) {
  EXPECT_THROW(shd_cpdag(DiGraph(2, {{0, 1}, {1, 0}}), DiGraph(2)), InvalidArgument);
}

TEST(ShdCpdag, ZeroWhenCpdagsMatch) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_dag(5, 2.0, rng());
    const auto b = random_dag(5, 2.0, rng());
    EXPECT_EQ(shd_cpdag(a, b) == 0, cpdag(a) == cpdag(b));
  }
}

TEST(Evaluate, ReportsEverything) {
  const DiGraph truth(4, {{0, 1}, {1, 2}, {2, 3}});
  const DiGraph pred(4, {{0, 1}, {2, 1}});
  bool defined = false;
  const auto m = evaluate(pred, truth, &defined);
  EXPECT_TRUE(defined);
  EXPECT_EQ(m.shd, 2u);
  EXPECT_EQ(m.precision, 0.5);
  EXPECT_NEAR(m.recall, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.n_pred_edges, 2u);
  EXPECT_EQ(m.n_true_edges, 3u);
}

TEST(Evaluate, CyclicPredictionLeavesCpdagUndefined) {
  bool defined = true;
  const auto m = evaluate(DiGraph(2, {{0, 1}, {1, 0}}), DiGraph(2, {{0, 1}}), &defined);
  EXPECT_FALSE(defined);
  EXPECT_EQ(m.shd, 1u);
}
