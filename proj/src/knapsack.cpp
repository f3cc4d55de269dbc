#include "treebounds/knapsack.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <ostream>
#include <string>

#include "treebounds/errors.hpp"

namespace treebounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_instance(const KnapsackInstance& inst) {
  if (!inst.topology) throw Error(ErrorKind::invariant_breach, "knapsack instance without a tree");
  const auto& topo = *inst.topology;
  if (static_cast<int>(inst.alpha.size()) != topo.size() ||
      static_cast<int>(inst.beta.size()) != topo.edge_count()) {
    throw Error(ErrorKind::invariant_breach, "knapsack costs do not match the tree");
  }
  for (double v : inst.alpha) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invariant_breach, "non-finite node cost");
  }
  for (double v : inst.beta) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invariant_breach, "non-finite edge cost");
  }
}

void collect(const TreeTopology& topo, const StateTable<std::pair<int, int>>& choice, int i,
             int s, int y, int t, std::vector<int>& sel) {
  while (s > 0) {
    const auto [yc, a] = choice.at(i, s, y, t);
    const int c = topo.child(i, s);
    collect(topo, choice, c, topo.out_degree(c), yc, a, sel);
    t -= a;
    --s;
  }
  sel[i] = y;
}

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

IndexRange admissible_ranges(const TreeTopology& topo, int node, int s, int t, SplitCase c) {
  const int n1 = topo.subtree_size(node, s - 1);
  const int n2 = topo.subtree_size(topo.child(node, s));
  switch (c) {
    case SplitCase::c00: return {std::max(0, t - (n1 - 1)), std::min(n2 - 1, t)};
    case SplitCase::c01: return {std::max(1, t - (n1 - 1)), std::min(n2, t)};
    case SplitCase::c10: return {std::max(0, t - n1), std::min(n2 - 1, t - 1)};
    case SplitCase::c11: return {std::max(1, t - n1), std::min(n2, t - 1)};
  }
  return {};
}

DpTable::DpTable(const TreeTopology& topo)
    : values_(topo, kInf), choice_(topo, std::pair{-1, -1}) {}

void DpTable::write_csv(std::ostream& os) const {
  os << "i,s,y,t,value\n";
  if (!topo_) return;
  for (int i = 0; i < topo_->size(); ++i) {
    for (int s = 0; s <= topo_->out_degree(i); ++s) {
      for (int y = 0; y <= 1; ++y) {
        for (int t = y; t <= topo_->subtree_size(i, s) - 1 + y; ++t) {
          os << topo_->external_id(i) << ',' << s << ',' << y << ',' << t << ','
             << fmt_double(values_.at(i, s, y, t)) << '\n';
        }
      }
    }
  }
}

std::vector<double> qkp_by_cardinality(const KnapsackInstance& inst, DpTable* table) {
  check_instance(inst);
  const auto& topo = *inst.topology;
  DpTable local;
  DpTable& dp = table ? *table : local;
  dp = DpTable(topo);
  dp.topo_ = inst.topology;

  for (int i : topo.postorder()) {
    dp.values_.at(i, 0, 0, 0) = 0.0;
    dp.values_.at(i, 0, 1, 1) = inst.alpha[i];
    for (int s = 1; s <= topo.out_degree(i); ++s) {
      const int c = topo.child(i, s);
      const int dc = topo.out_degree(c);
      const int n1 = topo.subtree_size(i, s - 1);
      const int n2 = topo.subtree_size(c);
      const double beta = inst.beta[topo.edge_into(c)];
      for (int y = 0; y <= 1; ++y) {
        for (int t1 = y; t1 <= n1 - 1 + y; ++t1) {
          const double left = dp.values_.at(i, s - 1, y, t1);
          for (int yc = 0; yc <= 1; ++yc) {
            const double extra = (y == 1 && yc == 1) ? beta : 0.0;
            for (int a = yc; a <= n2 - 1 + yc; ++a) {
              const double v = left + dp.values_.at(c, dc, yc, a) + extra;
              double& slot = dp.values_.at(i, s, y, t1 + a);
              if (v < slot) {
                slot = v;
                dp.choice_.at(i, s, y, t1 + a) = {yc, a};
              }
            }
          }
        }
      }
    }
  }

  const int n = topo.size();
  const int r = topo.root();
  const int d = topo.out_degree(r);
  std::vector<double> best(n + 1, kInf);
  for (int t = 0; t <= n; ++t) {
    if (t <= n - 1) best[t] = std::min(best[t], dp.values_.at(r, d, 0, t));
    if (t >= 1) best[t] = std::min(best[t], dp.values_.at(r, d, 1, t));
  }
  return best;
}

KnapsackSolution solve_qkp(const KnapsackInstance& inst, DpTable* table) {
  check_instance(inst);
  const auto& topo = *inst.topology;
  const int n = topo.size();
  if (inst.k > n) {
    throw Error(ErrorKind::infeasible_cardinality,
                "cardinality " + std::to_string(inst.k) + " exceeds the " + std::to_string(n) +
                    " available nodes");
  }
  DpTable local;
  DpTable& dp = table ? *table : local;
  qkp_by_cardinality(inst, &dp);

  const int r = topo.root();
  const int d = topo.out_degree(r);
  KnapsackSolution out;
  out.value = kInf;
  int best_y = 0;
  int best_t = 0;
  for (int t = std::max(0, inst.k); t <= n; ++t) {
    for (int y = 0; y <= 1; ++y) {
      if (!StateTable<double>::admissible(topo, r, d, y, t)) continue;
      const double v = dp.at(r, d, y, t);
      if (v < out.value) {
        out.value = v;
        best_y = y;
        best_t = t;
      }
    }
  }
  out.selection.assign(n, 0);
  collect(topo, dp.choice_, r, d, best_y, best_t, out.selection);
  return out;
}

KnapsackBlock emit_knapsack_block(lp::LPProblem& problem, const TreeTopology& topo,
                                  std::span<const int> alpha_vars,
                                  std::span<const int> beta_vars, const KnapsackLink& link) {
  using lp::Relation;
  const int n = topo.size();
  if (static_cast<int>(alpha_vars.size()) != n ||
      static_cast<int>(beta_vars.size()) != topo.edge_count()) {
    throw Error(ErrorKind::invariant_breach, "cost variables do not match the tree");
  }
  KnapsackBlock block;
  block.x = StateTable<int>(topo, -1);
  block.first_row = problem.num_constraints();

  const auto name = [&](int i, int s, int y, int t) {
    return "x_" + std::to_string(topo.external_id(i)) + '_' + std::to_string(s) + '_' +
           std::to_string(y) + '_' + std::to_string(t);
  };
  const auto var = [&](int i, int s, int y, int t) {
    int& v = block.x.at(i, s, y, t);
    if (v < 0) v = problem.add_variable(name(i, s, y, t));
    return v;
  };

  for (int i : topo.postorder()) {
    const int d = topo.out_degree(i);
    // Internal nodes never reference their own s = 0 states.
    for (int s = d == 0 ? 0 : 1; s <= d; ++s) {
      problem.add_constraint({{var(i, s, 0, 0), 1.0}}, Relation::equal, 0.0);
      problem.add_constraint({{var(i, s, 1, 1), 1.0}, {alpha_vars[i], -1.0}}, Relation::equal,
                             0.0);
    }
    if (d == 0) continue;

    {
      const int j = topo.child(i, 1);
      const int dj = topo.out_degree(j);
      const int n1 = topo.subtree_size(i, 1);
      const int beta = beta_vars[topo.edge_into(j)];
      for (int t = 0; t <= n1 - 2; ++t) {
        problem.add_constraint({{var(j, dj, 0, t), 1.0}, {var(i, 1, 0, t), -1.0}},
                               Relation::greater_equal, 0.0);
      }
      for (int t = 1; t <= n1 - 1; ++t) {
        problem.add_constraint({{var(j, dj, 1, t), 1.0}, {var(i, 1, 0, t), -1.0}},
                               Relation::greater_equal, 0.0);
      }
      for (int t = 1; t <= n1 - 1; ++t) {
        problem.add_constraint(
            {{var(j, dj, 0, t - 1), 1.0}, {alpha_vars[i], 1.0}, {var(i, 1, 1, t), -1.0}},
            Relation::greater_equal, 0.0);
      }
      for (int t = 2; t <= n1; ++t) {
        problem.add_constraint({{var(j, dj, 1, t - 1), 1.0},
                                {alpha_vars[i], 1.0},
                                {beta, 1.0},
                                {var(i, 1, 1, t), -1.0}},
                               Relation::greater_equal, 0.0);
      }
    }

    for (int s = 2; s <= d; ++s) {
      const int c = topo.child(i, s);
      const int dc = topo.out_degree(c);
      const int ns = topo.subtree_size(i, s);
      const int beta = beta_vars[topo.edge_into(c)];
      struct Shape {
        SplitCase sc;
        int y, yc, t_lo, t_hi;
      };
      const Shape shapes[] = {
          {SplitCase::c00, 0, 0, 0, ns - 2},
          {SplitCase::c01, 0, 1, 1, ns - 1},
          {SplitCase::c10, 1, 0, 1, ns - 1},
          {SplitCase::c11, 1, 1, 2, ns},
      };
      for (const Shape& sh : shapes) {
        for (int t = sh.t_lo; t <= sh.t_hi; ++t) {
          const IndexRange range = admissible_ranges(topo, i, s, t, sh.sc);
          for (int a = range.lo; a <= range.hi; ++a) {
            std::vector<lp::Term> terms{{var(i, s - 1, sh.y, t - a), 1.0},
                                        {var(c, dc, sh.yc, a), 1.0},
                                        {var(i, s, sh.y, t), -1.0}};
            if (sh.sc == SplitCase::c11) terms.push_back({beta, 1.0});
            problem.add_constraint(terms, Relation::greater_equal, 0.0);
          }
        }
      }
    }
  }

  const int r = topo.root();
  const int d = topo.out_degree(r);
  const auto link_rows = [&](int z, int t) {
    if (t <= n - 1) {
      problem.add_constraint({{var(r, d, 0, t), 1.0}, {z, -1.0}}, Relation::greater_equal, 0.0);
    }
    if (t >= 1) {
      problem.add_constraint({{var(r, d, 1, t), 1.0}, {z, -1.0}}, Relation::greater_equal, 0.0);
    }
  };

  if (link.mode == KnapsackLink::Mode::threshold) {
    if (link.k > n) {
      throw Error(ErrorKind::infeasible_cardinality, "threshold exceeds the node count");
    }
    const int z = problem.add_variable("z");
    block.z.push_back(z);
    for (int t = std::max(0, link.k); t <= n; ++t) link_rows(z, t);
    if (link.lambda) {
      const double rhs = link.rhs.empty() ? 1.0 : link.rhs.front();
      problem.add_constraint({{*link.lambda, 1.0}, {z, 1.0}}, Relation::greater_equal, rhs);
    }
  } else {
    if (link.lambda && static_cast<int>(link.rhs.size()) != n + 1) {
      throw Error(ErrorKind::invariant_breach, "per-cardinality link needs n + 1 values");
    }
    for (int t = 0; t <= n; ++t) {
      const int z = problem.add_variable("z_" + std::to_string(t));
      block.z.push_back(z);
      link_rows(z, t);
      if (link.lambda) {
        problem.add_constraint({{*link.lambda, 1.0}, {z, 1.0}}, Relation::greater_equal,
                               link.rhs[t]);
      }
    }
  }
  block.row_count = problem.num_constraints() - block.first_row;
  return block;
}

}  // namespace treebounds
