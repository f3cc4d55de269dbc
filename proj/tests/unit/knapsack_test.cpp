#include "treebounds/errors.hpp"
#include "treebounds/knapsack.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace tb = treebounds;
namespace lp = treebounds::lp;

namespace {

std::shared_ptr<const tb::TreeTopology> make_tree(
    int n, const std::vector<std::pair<tb::ExternalId, tb::ExternalId>>& edges) {
  std::vector<tb::ExternalId> ids;
  for (int i = 1; i <= n; ++i) ids.push_back(i);
  return tb::TreeTopology::build(1, ids, edges);
}

std::shared_ptr<const tb::TreeTopology> series(int n) {
  std::vector<std::pair<tb::ExternalId, tb::ExternalId>> e;
  for (int i = 1; i < n; ++i) e.push_back({i, i + 1});
  return make_tree(n, e);
}

std::shared_ptr<const tb::TreeTopology> star(int n) {
  std::vector<std::pair<tb::ExternalId, tb::ExternalId>> e;
  for (int i = 2; i <= n; ++i) e.push_back({1, i});
  return make_tree(n, e);
}

std::shared_ptr<const tb::TreeTopology> random_tree(std::mt19937_64& rng, int n) {
  std::vector<std::pair<tb::ExternalId, tb::ExternalId>> e;
  for (int i = 2; i <= n; ++i) e.push_back({1 + static_cast<int>(rng() % (i - 1)), i});
  return make_tree(n, e);
}

double brute_force(const tb::KnapsackInstance& inst) {
  const auto& topo = *inst.topology;
  const int n = topo.size();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) < inst.k) continue;
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += (mask >> i & 1u) ? inst.alpha[i] : 0.0;
    for (int e = 0; e < topo.edge_count(); ++e) {
      const auto& ed = topo.edge(e);
      if ((mask >> ed.parent & 1u) && (mask >> ed.child & 1u)) v += inst.beta[e];
    }
    best = std::min(best, v);
  }
  return best;
}

double cost_of(const tb::KnapsackInstance& inst, const std::vector<int>& sel) {
  double v = 0.0;
  for (int i = 0; i < inst.topology->size(); ++i) v += sel[i] * inst.alpha[i];
  for (int e = 0; e < inst.topology->edge_count(); ++e) {
    const auto& ed = inst.topology->edge(e);
    v += sel[ed.parent] * sel[ed.child] * inst.beta[e];
  }
  return v;
}

// Reference recursion for a series 1 -> 2 -> ... -> n, walking from the leaf.
double series_reference(const std::vector<double>& alpha, const std::vector<double>& beta,
                        int k) {
  const int n = static_cast<int>(alpha.size());
  const double inf = std::numeric_limits<double>::infinity();
  // f[y][t] for the subtree rooted at the current node.
  std::vector<std::vector<double>> f(2, std::vector<double>(n + 1, inf));
  f[0][0] = 0.0;
  f[1][1] = alpha[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    std::vector<std::vector<double>> g(2, std::vector<double>(n + 1, inf));
    for (int t = 0; t <= n; ++t) {
      g[0][t] = std::min(f[0][t], f[1][t]);
      if (t >= 1) g[1][t] = std::min(f[0][t - 1] + alpha[i], f[1][t - 1] + alpha[i] + beta[i]);
    }
    f = g;
  }
  double best = inf;
  for (int t = std::max(k, 0); t <= n; ++t) best = std::min({best, f[0][t], f[1][t]});
  return best;
}

// Reference recursion for a star centred at node 1, adding leaves one by one.
double star_reference(const std::vector<double>& alpha, const std::vector<double>& beta,
                      int k) {
  const int n = static_cast<int>(alpha.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> g(2, std::vector<double>(n + 1, inf));
  g[0][0] = 0.0;
  g[0][1] = alpha[1];
  g[1][1] = alpha[0];
  g[1][2] = alpha[0] + alpha[1] + beta[0];
  for (int i = 2; i < n; ++i) {
    auto h = g;
    for (int t = 1; t <= n; ++t) {
      h[0][t] = std::min(g[0][t], g[0][t - 1] + alpha[i]);
      h[1][t] = std::min(g[1][t], g[1][t - 1] + alpha[i] + beta[i - 1]);
    }
    g = h;
  }
  double best = inf;
  for (int t = std::max(k, 0); t <= n; ++t) best = std::min({best, g[0][t], g[1][t]});
  return best;
}

tb::KnapsackInstance random_instance(std::mt19937_64& rng,
                                     std::shared_ptr<const tb::TreeTopology> topo,
                                     bool integer) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  tb::KnapsackInstance inst;
  inst.topology = topo;
  for (int i = 0; i < topo->size(); ++i) {
    inst.alpha.push_back(integer ? std::round(u(rng)) : u(rng));
  }
  for (int e = 0; e < topo->edge_count(); ++e) {
    inst.beta.push_back(integer ? std::round(u(rng)) : u(rng));
  }
  return inst;
}

// Fix alpha and beta in the emitted block and maximize z.
double block_value(const tb::KnapsackInstance& inst) {
  lp::LPProblem p(lp::Sense::maximize);
  std::vector<int> a, b;
  for (double v : inst.alpha) a.push_back(p.add_variable("a", v, v));
  for (double v : inst.beta) b.push_back(p.add_variable("b", v, v));
  tb::KnapsackLink link;
  link.k = inst.k;
  const auto block = tb::emit_knapsack_block(p, *inst.topology, a, b, link);
  p.set_objective(block.z[0], 1.0);
  const auto sol = lp::solve(p);
  EXPECT_EQ(sol.status, lp::Status::optimal);
  return sol.objective;
}

}  // namespace

TEST(AdmissibleRanges, StarOnThreeNodes) {
  const auto topo = star(3);
  const auto r1 = tb::admissible_ranges(*topo, 0, 2, 1, tb::SplitCase::c00);
  EXPECT_EQ(r1.lo, 0);
  EXPECT_EQ(r1.hi, 0);
  const auto r2 = tb::admissible_ranges(*topo, 0, 2, 1, tb::SplitCase::c01);
  EXPECT_EQ(r2.lo, 1);
  EXPECT_EQ(r2.hi, 1);
  EXPECT_TRUE(tb::admissible_ranges(*topo, 0, 2, 0, tb::SplitCase::c11).empty());
}

TEST(AdmissibleRanges, MatchEnumeratedSplits) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    const auto topo = random_tree(rng, 2 + static_cast<int>(rng() % 12));
    for (int i = 0; i < topo->size(); ++i) {
      for (int s = 1; s <= topo->out_degree(i); ++s) {
        const int n1 = topo->subtree_size(i, s - 1);
        const int n2 = topo->subtree_size(topo->child(i, s));
        for (int c = 1; c <= 4; ++c) {
          const int y = c >= 3;
          const int yc = c % 2 == 0;
          for (int t = -1; t <= n1 + n2 + 1; ++t) {
            int lo = 1 << 20, hi = -1;
            for (int a = yc; a <= n2 - 1 + yc; ++a) {
              if (t - a >= y && t - a <= n1 - 1 + y) {
                lo = std::min(lo, a);
                hi = std::max(hi, a);
              }
            }
            const auto r = tb::admissible_ranges(*topo, i, s, t, static_cast<tb::SplitCase>(c));
            if (hi < 0) {
              EXPECT_TRUE(r.empty());
            } else {
              EXPECT_EQ(r.lo, lo);
              EXPECT_EQ(r.hi, hi);
            }
          }
        }
      }
    }
  }
}

TEST(Knapsack, TwoNodeExamples) {
  tb::KnapsackInstance inst{series(2), {1.0, 1.0}, {-3.0}, 1};
  auto sol = tb::solve_qkp(inst);
  EXPECT_DOUBLE_EQ(sol.value, -1.0);
  EXPECT_EQ(sol.selection, (std::vector<int>{1, 1}));
  inst.beta = {3.0};
  sol = tb::solve_qkp(inst);
  EXPECT_DOUBLE_EQ(sol.value, 1.0);
  EXPECT_EQ(sol.selection[0] + sol.selection[1], 1);
  inst.k = 3;
  EXPECT_THROW(
      {
        try {
          tb::solve_qkp(inst);
        } catch (const tb::Error& e) {
          EXPECT_EQ(e.kind(), tb::ErrorKind::infeasible_cardinality);
          throw;
        }
      },
      tb::Error);
}

TEST(Knapsack, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 120; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 12);
    auto inst = random_instance(rng, random_tree(rng, n), rep % 2 == 0);
    double previous = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
      inst.k = k;
      const auto sol = tb::solve_qkp(inst);
      const double expect = brute_force(inst);
      if (rep % 2 == 0) {
        EXPECT_EQ(sol.value, expect);
      } else {
        EXPECT_NEAR(sol.value, expect, 1e-9);
      }
      EXPECT_NEAR(cost_of(inst, sol.selection), sol.value, 1e-9);
      int count = 0;
      for (int c : sol.selection) count += c;
      EXPECT_GE(count, k);
      EXPECT_GE(sol.value, previous - 1e-12);
      previous = sol.value;
    }
  }
}

TEST(Knapsack, SeriesAndStarMatchReferenceRecursions) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 14);
    for (bool is_star : {false, true}) {
      auto inst = random_instance(rng, is_star ? star(n) : series(n), false);
      for (int k = 0; k <= n; ++k) {
        inst.k = k;
        const double ref = is_star ? star_reference(inst.alpha, inst.beta, k)
                                   : series_reference(inst.alpha, inst.beta, k);
        EXPECT_NEAR(tb::solve_qkp(inst).value, ref, 1e-9);
      }
    }
  }
}

TEST(Knapsack, EmittedBlockReproducesDp) {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 10);
    auto inst = random_instance(rng, random_tree(rng, n), false);
    inst.k = static_cast<int>(rng() % (n + 1));
    EXPECT_NEAR(block_value(inst), tb::solve_qkp(inst).value, 1e-7);
  }
}

TEST(Knapsack, SeriesTwoBlockShape) {
  const auto topo = series(2);
  lp::LPProblem p;
  std::vector<int> a{p.add_variable("a1"), p.add_variable("a2")};
  std::vector<int> b{p.add_variable("b12")};
  tb::KnapsackLink link;
  link.k = 1;
  const auto block = tb::emit_knapsack_block(p, *topo, a, b, link);
  // Leaf states, then four states for the root with its child.
  EXPECT_EQ(p.num_variables(), 3 + 6 + 1);
  int equalities = 0, inequalities = 0;
  for (const auto& row : p.constraints()) {
    (row.relation == lp::Relation::equal ? equalities : inequalities)++;
  }
  EXPECT_EQ(equalities, 4);
  // Four first-child rows and three root rows (y = 0: t = 1; y = 1: t = 1, 2).
  EXPECT_EQ(inequalities, 4 + 3);
  EXPECT_EQ(block.row_count, 11);
  EXPECT_GE(block.x.at(1, 0, 1, 1), 0);
  EXPECT_GE(block.x.at(0, 1, 1, 2), 0);
}

TEST(Knapsack, SplitRowCountsMatchStateCombinations) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 15);
    const auto topo = random_tree(rng, n);
    lp::LPProblem p;
    std::vector<int> a, b;
    for (int i = 0; i < n; ++i) a.push_back(p.add_variable("a"));
    for (int e = 0; e < n - 1; ++e) b.push_back(p.add_variable("b"));
    tb::KnapsackLink link;
    link.k = n;
    const auto block = tb::emit_knapsack_block(p, *topo, a, b, link);
    int expected = 1;  // k = n leaves only the t = n row on the y = 1 branch
    for (int i = 0; i < n; ++i) {
      const int d = topo->out_degree(i);
      expected += d == 0 ? 2 : 2 * d;
      for (int s = 1; s <= d; ++s) {
        expected += 4 * topo->subtree_size(i, s - 1) * topo->subtree_size(topo->child(i, s));
      }
    }
    EXPECT_EQ(block.row_count, expected);
  }
}

TEST(Knapsack, DpCsvDump) {
  tb::KnapsackInstance inst{series(2), {1.0, 2.0}, {0.5}, 0};
  tb::DpTable table;
  tb::solve_qkp(inst, &table);
  std::ostringstream os;
  table.write_csv(os);
  EXPECT_NE(os.str().find("1,1,1,2,3.5\n"), std::string::npos) << os.str();
  EXPECT_NE(os.str().find("2,0,1,1,2\n"), std::string::npos);
}
