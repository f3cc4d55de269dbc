#include "treebounds/bounds.hpp"
#include "treebounds/cond_ind.hpp"
#include "treebounds/errors.hpp"
#include "treebounds/generators.hpp"
#include "treebounds/oracle.hpp"

#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"

namespace tb = treebounds;

TEST(CondInd, ChowLiuValues) {
  EXPECT_NEAR(tb::ci_tail(fixtures::chow_liu_model(1), 1), 0.8704, 5e-5);
  EXPECT_NEAR(tb::ci_tail(fixtures::chow_liu_model(2), 4), 0.1488, 5e-5);
  EXPECT_NEAR(tb::ci_tail(fixtures::chow_liu_model(3), 2), 0.6663, 5e-5);
  EXPECT_NEAR(tb::ci_tail(fixtures::single(0.3), 1), 0.3, 1e-15);
}

TEST(CondInd, IndependentPairPmf) {
  const auto pmf = tb::ci_pmf(fixtures::two_node(0.5, 0.5, 0.25));
  ASSERT_EQ(pmf.size(), 3u);
  EXPECT_NEAR(pmf[0], 0.25, 1e-15);
  EXPECT_NEAR(pmf[1], 0.5, 1e-15);
  EXPECT_NEAR(pmf[2], 0.25, 1e-15);
}

TEST(CondInd, MatchesEnumerationAndSumsToOne) {
  tb::Rng rng(tb::stream_seed(3, 0));
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 11));
    const auto t = tb::random_consistent_model(tb::random_recursive_tree(n, rng), rng);
    const auto pmf = tb::ci_pmf(t);
    EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-10);
    for (int k = 0; k <= n; ++k) EXPECT_NEAR(tb::ci_tail(t, k), tb::ci_enumerate(t, k), 1e-12);
  }
}

TEST(CondInd, TableHasTotalProbabilityPerSubtree) {
  tb::Rng rng(tb::stream_seed(3, 1));
  const auto t = tb::random_consistent_model(tb::random_recursive_tree(12, rng), rng);
  const auto w = tb::ci_table(t);
  const auto& topo = t.topology();
  for (int i = 0; i < topo.size(); ++i) {
    for (int s = 0; s <= topo.out_degree(i); ++s) {
      double total = 0.0;
      for (int y = 0; y <= 1; ++y) {
        for (int c = y; c <= topo.subtree_size(i, s) - 1 + y; ++c) {
          const double v = w.at(i, s, y, c);
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
          total += v;
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-10);
    }
  }
}

TEST(CondInd, IndependenceGivesPoissonBinomial) {
  tb::Rng rng(tb::stream_seed(3, 2));
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 14));
    const auto topo = tb::random_recursive_tree(n, rng);
    std::vector<double> p(n);
    for (double& v : p) v = rng.uniform();
    const auto t = tb::copula_model(topo, p, tb::Copula::independence);
    const auto ci = tb::ci_pmf(t);
    const auto pb = tb::poisson_binomial_pmf(p);
    for (int s = 0; s <= n; ++s) EXPECT_NEAR(ci[s], pb[s], 1e-12);
  }
}

TEST(CondInd, DegenerateMarginals) {
  // A parent that is never 1: transitions conditioned on it carry no mass.
  auto t = fixtures::two_node(0.0, 0.4, 0.0);
  EXPECT_NEAR(tb::ci_tail(t, 1), 0.4, 1e-15);
  EXPECT_NEAR(tb::ci_tail(t, 2), 0.0, 1e-15);
  t = fixtures::two_node(1.0, 0.4, 0.4);
  EXPECT_NEAR(tb::ci_tail(t, 2), 0.4, 1e-15);
  EXPECT_NEAR(tb::ci_enumerate(t, 2), 0.4, 1e-15);
  // Within the Fréchet tolerance but still mass on an impossible state.
  tb::TreeSpec s;
  s.root = 1;
  s.nodes = {{1, 0.0}, {2, 0.4}};
  s.edges = {{1, 2, 5e-13}};
  const auto bad = tb::TreeModel::build(s);
  try {
    tb::ci_pmf(bad);
    ADD_FAILURE();
  } catch (const tb::Error& e) {
    EXPECT_EQ(e.kind(), tb::ErrorKind::degenerate_conditioning);
  }
}
