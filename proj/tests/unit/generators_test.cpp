#include "treebounds/generators.hpp"

#include <gtest/gtest.h>

#include <set>

namespace tb = treebounds;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  tb::Rng a(tb::stream_seed(42, 3)), b(tb::stream_seed(42, 3)), c(tb::stream_seed(42, 4));
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    EXPECT_EQ(va, b.next());
    EXPECT_NE(va, c.next());
  }
}

TEST(Rng, DrawRanges) {
  tb::Rng r(1);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto v = r.uniform_int(-2, 2);
    EXPECT_GE(v, -2);
    EXPECT_LE(v, 2);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Generators, RandomRecursiveTreeAndExperimentModel) {
  tb::Rng r(tb::stream_seed(9, 0));
  for (int rep = 0; rep < 50; ++rep) {
    const auto topo = tb::random_recursive_tree(15, r);
    EXPECT_EQ(topo->size(), 15);
    for (int i = 0; i < 15; ++i) {
      if (i == topo->root()) continue;
      EXPECT_LT(topo->external_id(topo->parent(i)), topo->external_id(i));
    }
  }
  for (auto cop : {tb::Copula::comonotone, tb::Copula::anti_comonotone}) {
    const auto m = tb::experiment_model(15, cop, r);
    for (int i = 0; i < 15; ++i) {
      EXPECT_GT(m.p(i), 0.0);
      EXPECT_LE(m.p(i), 0.1);
    }
    for (int e = 0; e < 14; ++e) {
      const auto& ed = m.topology().edge(e);
      EXPECT_DOUBLE_EQ(m.p11(e), tb::copula_bivariate(cop, m.p(ed.parent), m.p(ed.child)));
    }
  }
}
